#include "mondrian/harness/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mondrian::harness {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& text, const std::string& where) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (!text.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw std::runtime_error(where + ": cannot parse '" + text + "' as a number");
  }
  return v;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return in;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& cell : split(text, ',')) out.push_back(parse_double(cell, "number list"));
  return out;
}

TrainingSet parse_training_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(source + ": empty file");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  auto header = split(trim(line), ',');
  if (header.size() < 2 || header.back() != "y") {
    throw std::runtime_error(source + ": header must be x1,...,xd,y");
  }
  const std::size_t dim = header.size() - 1;
  for (std::size_t j = 0; j < dim; ++j) {
    if (header[j] != "x" + std::to_string(j + 1)) {
      throw std::runtime_error(source + ": header column " + std::to_string(j + 1) + " must be 'x" +
                               std::to_string(j + 1) + "', found '" + header[j] + "'");
    }
  }

  std::vector<double> x, y;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    auto cells = split(line, ',');
    const std::string where = source + ":" + std::to_string(line_no);
    if (cells.size() != dim + 1) {
      throw std::runtime_error(where + ": expected " + std::to_string(dim + 1) + " columns, found " +
                               std::to_string(cells.size()));
    }
    for (std::size_t j = 0; j < dim; ++j) {
      double v = parse_double(cells[j], where);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw std::runtime_error(where + ": covariate x" + std::to_string(j + 1) + " = " + cells[j] +
                                 " lies outside [0,1]; rescale covariates to [0,1] (min-max scaling) first");
      }
      x.push_back(v);
    }
    y.push_back(parse_double(cells[dim], where));
  }
  if (y.empty()) throw std::runtime_error(source + ": no observations");
  return TrainingSet(std::move(x), std::move(y), dim);
}

TrainingSet read_training_csv(const std::string& path) {
  auto in = open_input(path);
  return parse_training_csv(in, path);
}

std::vector<double> read_query_csv(const std::string& path, std::size_t dim) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  auto header = split(trim(line), ',');
  std::size_t columns = header.size();
  if (columns == dim + 1 && header.back() == "y") {
    // response column ignored
  } else if (columns != dim) {
    throw std::runtime_error(path + ": expected " + std::to_string(dim) + " covariate columns");
  }
  std::vector<double> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    auto cells = split(line, ',');
    const std::string where = path + ":" + std::to_string(line_no);
    if (cells.size() != columns) throw std::runtime_error(where + ": wrong number of columns");
    for (std::size_t j = 0; j < dim; ++j) {
      double v = parse_double(cells[j], where);
      if (!(v >= 0.0 && v <= 1.0)) throw std::runtime_error(where + ": query coordinate outside [0,1]");
      out.push_back(v);
    }
  }
  return out;
}

void write_training_csv(const std::string& path, const TrainingSet& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  for (std::size_t j = 0; j < data.dim(); ++j) out << 'x' << (j + 1) << ',';
  out << "y\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.row(i)) out << format_number(v) << ',';
    out << format_number(data.y()[i]) << '\n';
  }
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace mondrian::harness
