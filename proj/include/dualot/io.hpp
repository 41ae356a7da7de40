// CSV grid files and atomic file output.
#ifndef DUALOT_IO_HPP
#define DUALOT_IO_HPP

#include "dualot/grid.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace dualot {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes `content` to a sibling temporary file, then renames it over `path`.
void write_atomic(const std::string& path, const std::string& content);

/// Decimal text of x with 17 significant digits, enough to round-trip a double.
std::string format_double(double x);

/// A parsed grid file: '#' metadata lines as key=value pairs, the column
/// header, and one row of integer indices plus a value per entry.
struct GridTable {
  std::map<std::string, std::string> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<long>> indices;
  std::vector<double> values;
};

/// CSV of a scalar field with columns (i, j_1..j_d, value). Fields on Omega_D
/// still carry an i column, fixed to 0.
std::string scalar_grid_csv(const GridSpec<double>& g, Domain domain, const VectorX<double>& values,
                            const std::string& name);

/// CSV of a vector field stored component-block-wise per slice, with columns
/// (i, j_1..j_d, k, value).
std::string vector_grid_csv(const GridSpec<double>& g, Domain domain, const VectorX<double>& values,
                            const std::string& name);

GridTable parse_grid_csv(const std::string& text);
GridTable read_grid_csv(const std::string& path);

}  // namespace dualot

#endif  // DUALOT_IO_HPP
