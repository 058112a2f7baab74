#pragma once

// Minimal static SVG plots with fixed-precision coordinates, so identical
// inputs give identical bytes.

#include "tshape/tensor.hpp"

#include <span>
#include <string>
#include <vector>

namespace tshape {

/// Cell (i, j) drawn at row i, column j, colored on a dark-to-light ramp
/// between the matrix minimum and maximum.
std::string heatmap_svg(const RowMatrix& m, const std::string& title);

struct LineSeries {
  std::string name;
  std::vector<double> y;
  std::string color;
};

/// All series share the x axis 0..n-1.
std::string line_plot_svg(std::span<const LineSeries> series, const std::string& title);

}  // namespace tshape
