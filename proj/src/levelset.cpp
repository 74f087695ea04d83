#include <heatgl/levelset.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <unordered_map>

#include <heatgl/error.hpp>
#include <heatgl/heat_flow.hpp>
#include <heatgl/io.hpp>

namespace heatgl {

namespace {

struct Segment
{
    std::size_t a, b; // edge ids
};

} // namespace

std::vector<Polyline> marching_squares(const Eigen::MatrixXd& field, double level, double lo, double hi)
{
    const auto n = static_cast<std::size_t>(field.rows());
    if (n < 2 || field.cols() != field.rows()) throw Error(Errc::shape_mismatch, "field must be square with side >= 2");
    const double h = (hi - lo) / static_cast<double>(n - 1);
    auto value = [&](std::size_t i, std::size_t j) { return field(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); };
    auto horizontal = [n](std::size_t i, std::size_t j) { return 2 * (i * n + j); };
    auto vertical = [n](std::size_t i, std::size_t j) { return 2 * (i * n + j) + 1; };

    std::unordered_map<std::size_t, Point2> crossing;
    auto cross = [&](std::size_t id) {
        if (crossing.count(id)) return;
        const std::size_t cell = id / 2;
        const std::size_t i = cell / n, j = cell % n;
        const bool is_vertical = id % 2;
        const double f0 = value(i, j);
        const double f1 = is_vertical ? value(i + 1, j) : value(i, j + 1);
        const double s = f1 != f0 ? (level - f0) / (f1 - f0) : 0.5;
        Point2 p{lo + static_cast<double>(j) * h, lo + static_cast<double>(i) * h};
        (is_vertical ? p.y : p.x) += s * h;
        crossing.emplace(id, p);
    };

    std::vector<Segment> segments;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = 0; j + 1 < n; ++j) {
            const std::array<double, 4> f{value(i, j), value(i, j + 1), value(i + 1, j + 1), value(i + 1, j)};
            std::array<bool, 4> in{};
            for (int c = 0; c < 4; ++c) in[c] = f[c] < level;
            const std::array<std::size_t, 4> edge{horizontal(i, j), vertical(i, j + 1), horizontal(i + 1, j), vertical(i, j)};
            // edge k joins corners k and (k + 1) % 4
            std::vector<int> cut;
            for (int k = 0; k < 4; ++k) {
                if (in[k] != in[(k + 1) % 4]) cut.push_back(k);
            }
            if (cut.empty()) continue;
            for (int k : cut) cross(edge[k]);
            if (cut.size() == 2) {
                segments.push_back({edge[cut[0]], edge[cut[1]]});
            } else {
                const bool centre_in = (f[0] + f[1] + f[2] + f[3]) / 4.0 < level;
                if (centre_in == in[0]) {
                    segments.push_back({edge[0], edge[1]}); // around corner 1
                    segments.push_back({edge[2], edge[3]}); // around corner 3
                } else {
                    segments.push_back({edge[3], edge[0]});
                    segments.push_back({edge[1], edge[2]});
                }
            }
        }
    }

    std::unordered_map<std::size_t, std::vector<std::size_t>> touching;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        touching[segments[s].a].push_back(s);
        touching[segments[s].b].push_back(s);
    }
    std::vector<bool> used(segments.size(), false);
    auto next_segment = [&](std::size_t id, std::size_t from) -> std::ptrdiff_t {
        for (auto s : touching[id]) {
            if (s != from && !used[s]) return static_cast<std::ptrdiff_t>(s);
        }
        return -1;
    };
    auto extend = [&](std::vector<std::size_t>& chain, std::size_t seg) {
        std::size_t tip = chain.back();
        while (true) {
            const auto s = next_segment(tip, seg);
            if (s < 0) break;
            seg = static_cast<std::size_t>(s);
            used[seg] = true;
            tip = segments[seg].a == tip ? segments[seg].b : segments[seg].a;
            chain.push_back(tip);
        }
    };

    std::vector<Polyline> out;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        if (used[s]) continue;
        used[s] = true;
        std::vector<std::size_t> forward{segments[s].a, segments[s].b};
        extend(forward, s);
        std::vector<std::size_t> backward{segments[s].a};
        if (forward.back() != forward.front()) extend(backward, s);
        Polyline line;
        for (auto it = backward.rbegin(); it != backward.rend(); ++it) {
            if (it + 1 != backward.rend()) line.points.push_back(crossing.at(*it));
        }
        for (auto id : forward) line.points.push_back(crossing.at(id));
        if (line.points.size() > 2 && forward.back() == forward.front()) {
            line.closed = true;
            line.points.pop_back();
        }
        out.push_back(std::move(line));
    }
    return out;
}

Graph pair_singleton_graph()
{
    const std::vector<Edge> edges{{0, 1}};
    return Graph::from_edges(3, edges);
}

std::vector<LevelSetPanel> levelset_panels(std::span<const double> ts, std::span<const double> slice_levels, const LevelSetGrid& grid)
{
    if (grid.resolution < 2 || !(grid.hi > grid.lo)) throw Error(Errc::invalid_argument, "invalid level-set grid");
    const Graph g = pair_singleton_graph();
    const auto spectrum = spectral_decompose(g);
    const auto n = static_cast<Eigen::Index>(grid.resolution);
    const double h = (grid.hi - grid.lo) / static_cast<double>(grid.resolution - 1);
    std::vector<LevelSetPanel> panels;
    for (double t : ts) {
        if (!(t >= 0.0) || !std::isfinite(t)) throw Error(Errc::invalid_argument, "t must be >= 0 and finite");
        const Eigen::Matrix3d K = exact_heat_kernel(spectrum, t);
        LevelSetPanel panel;
        panel.t = t;
        for (double beta3 : slice_levels) {
            Eigen::MatrixXd field(n, n);
            for (Eigen::Index i = 0; i < n; ++i) {
                for (Eigen::Index j = 0; j < n; ++j) {
                    const Eigen::Vector3d b(grid.lo + static_cast<double>(j) * h, grid.lo + static_cast<double>(i) * h, beta3);
                    const Eigen::Vector3d smoothed = K * b.cwiseAbs2();
                    field(i, j) = smoothed.cwiseAbs().cwiseSqrt().sum();
                }
            }
            panel.slices.push_back({beta3, marching_squares(field, 1.0, grid.lo, grid.hi)});
        }
        panels.push_back(std::move(panel));
    }
    return panels;
}

void write_levelset_svg(std::ostream& out, const std::vector<LevelSetPanel>& panels, const LevelSetGrid& grid)
{
    constexpr double size = 240.0, margin = 20.0, title = 24.0;
    const double width = margin + static_cast<double>(panels.size()) * (size + margin);
    const double height = title + size + 2.0 * margin;
    const double scale = size / (grid.hi - grid.lo);
    const char* strokes[] = {"#1f4e9c", "#c0392b", "#27804a", "#8e44ad"};

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\" viewBox=\"0 0 "
        << width << ' ' << height << "\">\n";
    for (std::size_t k = 0; k < panels.size(); ++k) {
        const double x0 = margin + static_cast<double>(k) * (size + margin);
        const double y0 = margin + title;
        out << "<g class=\"panel\" data-t=\"" << format_double(panels[k].t) << "\">\n";
        out << "<text x=\"" << x0 + size / 2 << "\" y=\"" << margin + 12 << "\" text-anchor=\"middle\" font-size=\"14\">t = "
            << format_double(panels[k].t) << "</text>\n";
        out << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << size << "\" height=\"" << size
            << "\" fill=\"none\" stroke=\"#999\"/>\n";
        const double cx = x0 - grid.lo * scale, cy = y0 + grid.hi * scale;
        out << "<line x1=\"" << x0 << "\" y1=\"" << cy << "\" x2=\"" << x0 + size << "\" y2=\"" << cy << "\" stroke=\"#ddd\"/>\n";
        out << "<line x1=\"" << cx << "\" y1=\"" << y0 << "\" x2=\"" << cx << "\" y2=\"" << y0 + size << "\" stroke=\"#ddd\"/>\n";
        for (std::size_t s = 0; s < panels[k].slices.size(); ++s) {
            const auto& slice = panels[k].slices[s];
            for (const auto& line : slice.contours) {
                out << "<path class=\"contour\" data-beta3=\"" << format_double(slice.beta3) << "\" fill=\"none\" stroke=\""
                    << strokes[s % 4] << "\"" << (s ? " stroke-dasharray=\"4 3\"" : "") << " d=\"";
                for (std::size_t i = 0; i < line.points.size(); ++i) {
                    const auto& p = line.points[i];
                    char buf[64];
                    std::snprintf(buf, sizeof buf, "%c%.3f %.3f ", i ? 'L' : 'M', cx + p.x * scale, cy - p.y * scale);
                    out << buf;
                }
                if (line.closed) out << 'Z';
                out << "\"/>\n";
            }
        }
        out << "</g>\n";
    }
    out << "</svg>\n";
}

} // namespace heatgl
