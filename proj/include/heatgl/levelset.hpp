#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include <heatgl/graph.hpp>

namespace heatgl {

struct Point2
{
    double x = 0.0;
    double y = 0.0;
};

struct Polyline
{
    std::vector<Point2> points;
    bool closed = false;
};

/// field(i, j) sampled at (x_j, y_i) = (lo + j h, lo + i h) on a square grid;
/// traces {field = level} with saddle cells resolved by the cell-centre mean.
std::vector<Polyline> marching_squares(const Eigen::MatrixXd& field, double level, double lo, double hi);

/// Three vertices: 0 and 1 joined by an edge, 2 isolated.
Graph pair_singleton_graph();

struct LevelSetGrid
{
    double lo = -1.5;
    double hi = 1.5;
    std::size_t resolution = 201;
};

struct LevelSetSlice
{
    double beta3 = 0.0;
    std::vector<Polyline> contours;
};

struct LevelSetPanel
{
    double t = 0.0;
    std::vector<LevelSetSlice> slices; // first slice at beta3 = 0
};

/// Boundary of {Lambda_t <= 1} over (beta1, beta2) at each beta3 in slice_levels,
/// with the exact kernel of pair_singleton_graph().
std::vector<LevelSetPanel> levelset_panels(std::span<const double> ts,
                                           std::span<const double> slice_levels,
                                           const LevelSetGrid& grid = {});

void write_levelset_svg(std::ostream& out, const std::vector<LevelSetPanel>& panels, const LevelSetGrid& grid = {});

} // namespace heatgl
