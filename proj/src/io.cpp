#include "dualot/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace dualot {

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp + " for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write to " + tmp + " failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

void write_header(std::ostringstream& out, const GridSpec<double>& g, Domain domain, const std::string& name,
                  bool vector) {
  out << "# field=" << name << '\n'
      << "# domain=" << to_string(domain) << '\n'
      << "# d=" << g.d << '\n'
      << "# n_t=" << g.n_t << '\n'
      << "# n_x=" << g.n_x << '\n'
      << "# period=" << format_double(g.period) << '\n'
      << "# dt=" << format_double(g.dt) << '\n'
      << "# dx=" << format_double(g.dx) << '\n'
      << "# eps=" << format_double(g.eps) << '\n'
      << "# clamp=" << format_double(g.clamp) << '\n'
      << 'i';
  if (g.d == 1) {
    out << ",j";
  } else {
    for (int k = 1; k <= g.d; ++k) out << ",j" << k;
  }
  if (vector) out << ",k";
  out << ",value\n";
}

void write_indices(std::ostringstream& out, const GridSpec<double>& g, Index i, Index j) {
  out << i;
  for (int idx : g.unflatten(j)) out << ',' << idx;
}

}  // namespace

std::string scalar_grid_csv(const GridSpec<double>& g, Domain domain, const VectorX<double>& values,
                            const std::string& name) {
  const Index s = g.spatial_size();
  if (values.size() != g.size(domain)) throw IoError("field size does not match its domain");
  std::ostringstream out;
  write_header(out, g, domain, name, false);
  for (Index i = 0; i < g.slices(domain); ++i) {
    for (Index j = 0; j < s; ++j) {
      write_indices(out, g, i, j);
      out << ',' << format_double(values[i * s + j]) << '\n';
    }
  }
  return out.str();
}

std::string vector_grid_csv(const GridSpec<double>& g, Domain domain, const VectorX<double>& values,
                            const std::string& name) {
  const Index s = g.spatial_size();
  if (values.size() != g.size(domain) * g.d) throw IoError("field size does not match its domain");
  std::ostringstream out;
  write_header(out, g, domain, name, true);
  for (Index i = 0; i < g.slices(domain); ++i) {
    for (Index j = 0; j < s; ++j) {
      for (int k = 0; k < g.d; ++k) {
        write_indices(out, g, i, j);
        out << ',' << k << ',' << format_double(values[(i * g.d + k) * s + j]) << '\n';
      }
    }
  }
  return out.str();
}

GridTable parse_grid_csv(const std::string& text) {
  GridTable table;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        std::string key = line.substr(1, eq - 1);
        key.erase(0, key.find_first_not_of(' '));
        table.meta[key] = line.substr(eq + 1);
      }
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (table.columns.empty()) {
      table.columns = cells;
      if (cells.empty() || cells.back() != "value") throw IoError("grid file header must end with 'value'");
      continue;
    }
    if (cells.size() != table.columns.size()) {
      throw IoError("grid file line " + std::to_string(line_no) + ": wrong number of columns");
    }
    std::vector<long> idx;
    try {
      for (std::size_t c = 0; c + 1 < cells.size(); ++c) idx.push_back(std::stol(cells[c]));
      char* end = nullptr;
      const double v = std::strtod(cells.back().c_str(), &end);
      if (end == cells.back().c_str() || *end != '\0') throw IoError("bad value");
      table.values.push_back(v);
    } catch (const std::exception&) {
      throw IoError("grid file line " + std::to_string(line_no) + ": malformed number");
    }
    table.indices.push_back(std::move(idx));
  }
  if (table.columns.empty()) throw IoError("grid file has no header");
  return table;
}

GridTable read_grid_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_grid_csv(buf.str());
}

}  // namespace dualot
