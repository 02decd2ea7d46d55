#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>

namespace mondrian {

/// Non-owning view of an n x d row-major matrix of points.
struct PointsView {
  std::span<const double> data;
  std::size_t dim = 0;

  std::size_t rows() const { return dim == 0 ? 0 : data.size() / dim; }
  std::span<const double> row(std::size_t i) const { return data.subspan(i * dim, dim); }
};

/// True when every coordinate is finite and inside [0, 1].
bool in_unit_cube(std::span<const double> x) noexcept;

/// Throws std::invalid_argument unless x has `dim` coordinates in [0, 1].
void require_in_unit_cube(std::span<const double> x, std::size_t dim, const char* what);

}  // namespace mondrian
