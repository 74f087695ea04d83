#include <heatgl/heat_flow.hpp>

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include <heatgl/error.hpp>
#include <heatgl/parallel.hpp>
#include <heatgl/random.hpp>

namespace heatgl {

DenseKernel::DenseKernel(Eigen::MatrixXd kernel) : kernel_(std::move(kernel))
{
    if (kernel_.rows() != kernel_.cols()) throw Error(Errc::shape_mismatch, "kernel must be square");
}

void DenseKernel::apply(const Eigen::VectorXd& f, Eigen::VectorXd& out) const
{
    if (f.size() != kernel_.cols()) throw Error(Errc::length_mismatch, "vector length differs from p");
    out.noalias() = kernel_ * f;
}

double DenseKernel::apply_at(const Eigen::VectorXd& f, Vertex i) const
{
    return kernel_.row(i).dot(f);
}

void DenseKernel::support(Vertex, std::vector<Vertex>& out) const
{
    out.resize(size());
    std::iota(out.begin(), out.end(), Vertex{0});
}

HeatFlowMatrix::HeatFlowMatrix(std::size_t p,
                               std::size_t walks,
                               double t,
                               std::uint64_t seed,
                               std::vector<Vertex> terminals,
                               std::vector<std::uint32_t> step_counts)
    : p_(p), walks_(walks), t_(t), seed_(seed), terminals_(std::move(terminals)), steps_(std::move(step_counts))
{
    if (walks_ == 0) throw Error(Errc::invalid_argument, "walks per vertex must be positive");
    if (terminals_.size() != p_ * walks_) throw Error(Errc::length_mismatch, "terminal table is not p x B");
    if (!steps_.empty() && steps_.size() != terminals_.size()) {
        throw Error(Errc::length_mismatch, "step-count table is not p x B");
    }
    for (Vertex v : terminals_) {
        if (v >= p_) throw Error(Errc::index_out_of_range, "terminal vertex outside [0, p)");
    }
    total_steps_ = std::accumulate(steps_.begin(), steps_.end(), std::uint64_t{0});
}

std::span<const Vertex> HeatFlowMatrix::terminals(Vertex i) const
{
    if (i >= p_) throw Error(Errc::index_out_of_range, "vertex outside [0, p)");
    return {terminals_.data() + static_cast<std::size_t>(i) * walks_, walks_};
}

std::span<const std::uint32_t> HeatFlowMatrix::step_counts(Vertex i) const
{
    if (i >= p_) throw Error(Errc::index_out_of_range, "vertex outside [0, p)");
    if (steps_.empty()) return {};
    return {steps_.data() + static_cast<std::size_t>(i) * walks_, walks_};
}

double HeatFlowMatrix::mean_steps_per_walk() const noexcept
{
    if (terminals_.empty()) return 0.0;
    return static_cast<double>(total_steps_) / static_cast<double>(terminals_.size());
}

double HeatFlowMatrix::apply_at(const Eigen::VectorXd& f, Vertex i) const
{
    double sum = 0.0;
    for (Vertex v : terminals(i)) sum += f[v];
    return sum / static_cast<double>(walks_);
}

void HeatFlowMatrix::apply(const Eigen::VectorXd& f, Eigen::VectorXd& out) const
{
    if (static_cast<std::size_t>(f.size()) != p_) throw Error(Errc::length_mismatch, "vector length differs from p");
    out.resize(static_cast<Eigen::Index>(p_));
    const double inv = 1.0 / static_cast<double>(walks_);
    const double* fv = f.data();
    for (std::size_t i = 0; i < p_; ++i) {
        const Vertex* row = terminals_.data() + i * walks_;
        double sum = 0.0;
        for (std::size_t j = 0; j < walks_; ++j) sum += fv[row[j]];
        out[static_cast<Eigen::Index>(i)] = sum * inv;
    }
}

void HeatFlowMatrix::support(Vertex i, std::vector<Vertex>& out) const
{
    const auto row = terminals(i);
    out.assign(row.begin(), row.end());
}

namespace {

constexpr std::array<char, 4> hfm_magic{'H', 'F', 'M', '1'};

template <class T>
void write_le(std::ostream& out, T value)
{
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    out.write(bytes.data(), sizeof(T));
}

template <class T>
T read_le(std::istream& in)
{
    std::array<char, sizeof(T)> bytes;
    if (!in.read(bytes.data(), sizeof(T))) throw Error(Errc::parse_error, "truncated heat-flow file");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

} // namespace

void HeatFlowMatrix::save(std::ostream& out) const
{
    out.write(hfm_magic.data(), hfm_magic.size());
    write_le<std::uint64_t>(out, p_);
    write_le<std::uint64_t>(out, walks_);
    write_le<double>(out, t_);
    write_le<std::uint64_t>(out, seed_);
    for (Vertex v : terminals_) write_le<std::uint32_t>(out, v);
    if (!out) throw Error(Errc::io_error, "failed writing heat-flow matrix");
}

void HeatFlowMatrix::save_file(const std::string& path) const
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::io_error, "cannot write " + path);
    save(out);
}

HeatFlowMatrix HeatFlowMatrix::load(std::istream& in)
{
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != hfm_magic) {
        throw Error(Errc::parse_error, "not a heat-flow matrix file (bad magic)");
    }
    const auto p = read_le<std::uint64_t>(in);
    const auto walks = read_le<std::uint64_t>(in);
    const auto t = read_le<double>(in);
    const auto seed = read_le<std::uint64_t>(in);
    if (p >= (std::uint64_t{1} << 31) || walks == 0 || walks > (std::uint64_t{1} << 32) / std::max<std::uint64_t>(p, 1)) {
        throw Error(Errc::parse_error, "implausible heat-flow dimensions");
    }
    std::vector<Vertex> terminals(p * walks);
    for (auto& v : terminals) v = read_le<std::uint32_t>(in);
    return HeatFlowMatrix(p, walks, t, seed, std::move(terminals));
}

HeatFlowMatrix HeatFlowMatrix::load_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io_error, "cannot open " + path);
    return load(in);
}

HeatFlowMatrix simulate_heat_flow(const Graph& g,
                                  double t,
                                  std::size_t walks,
                                  std::uint64_t seed,
                                  const WalkOptions& options)
{
    if (!(t >= 0.0) || !std::isfinite(t)) throw Error(Errc::invalid_argument, "flow time must be finite and >= 0");
    if (walks == 0) throw Error(Errc::invalid_argument, "walks per vertex must be positive");
    const std::size_t p = g.size();
    std::vector<Vertex> terminals(p * walks);
    std::vector<std::uint32_t> steps(p * walks, 0);

    parallel_for(p, options.threads, [&](std::size_t i) {
        for (std::size_t j = 0; j < walks; ++j) {
            StreamRng rng(seed, i, j);
            auto v = static_cast<Vertex>(i);
            std::uint32_t jumps = 0;
            double clock = 0.0;
            while (true) {
                const auto deg = g.degree(v);
                if (deg == 0) break;
                const double rate = options.unit_rate_holding ? 1.0 : static_cast<double>(deg);
                clock += rng.exponential() / rate;
                if (!(clock < t)) break;
                v = g.neighbors(v)[rng.below(static_cast<std::uint32_t>(deg))];
                ++jumps;
            }
            terminals[i * walks + j] = v;
            steps[i * walks + j] = jumps;
        }
    });
    return HeatFlowMatrix(p, walks, t, seed, std::move(terminals), std::move(steps));
}

std::vector<double> heatflow_apply(const HeatFlowMatrix& H, const Eigen::VectorXd& f, std::span<const Vertex> S)
{
    if (static_cast<std::size_t>(f.size()) != H.size()) throw Error(Errc::length_mismatch, "vector length differs from p");
    if (S.empty()) throw Error(Errc::invalid_argument, "index set must be nonempty");
    std::vector<double> out;
    out.reserve(S.size());
    for (Vertex i : S) {
        if (i >= H.size()) throw Error(Errc::index_out_of_range, "index " + std::to_string(i) + " outside [0, p)");
        out.push_back(H.apply_at(f, i));
    }
    return out;
}

Eigen::MatrixXd exact_heat_kernel(const LaplacianSpectrum& spectrum, double t)
{
    if (!(t >= 0.0)) throw Error(Errc::invalid_argument, "flow time must be >= 0");
    const Eigen::VectorXd decay = (-t * spectrum.eigenvalues.array()).exp();
    return spectrum.eigenvectors * decay.asDiagonal() * spectrum.eigenvectors.transpose();
}

Eigen::MatrixXd exact_heat_kernel(const Graph& g, double t, std::size_t dense_limit)
{
    SpectralOptions options;
    options.dense_limit = dense_limit;
    return exact_heat_kernel(spectral_decompose(g, options), t);
}

} // namespace heatgl
