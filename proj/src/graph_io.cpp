#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hypergcl/graph.hpp"

namespace hypergcl {

namespace {

std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::runtime_error(where + ": not a number: '" + s + "'");
  }
  while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
  if (used != s.size()) throw std::runtime_error(where + ": not a number: '" + s + "'");
  return v;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

std::vector<std::vector<double>> read_rows(std::istream& in, const std::string& path) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    std::vector<double> row;
    for (const auto& cell : split_csv(line)) {
      row.push_back(parse_double(cell, path + ":" + std::to_string(lineno)));
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

}  // namespace

std::vector<std::pair<int, int>> read_edge_list(const std::string& path) {
  auto in = open(path);
  std::vector<std::pair<int, int>> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line) || line.front() == '#') continue;
    std::istringstream ss(line);
    long long u = -1, v = -1;
    std::string rest;
    if (!(ss >> u >> v) || (ss >> rest) || u < 0 || v < 0) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 'src dst'");
    }
    edges.emplace_back(static_cast<int>(u), static_cast<int>(v));
  }
  return edges;
}

Eigen::MatrixXd read_features_csv(const std::string& path) {
  auto in = open(path);
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error(path + ": empty file");
  const auto rows = read_rows(in, path);
  if (rows.empty()) throw std::runtime_error(path + ": no feature rows");
  if (rows.front().size() != split_csv(header).size()) {
    throw std::runtime_error(path + ": header width does not match rows");
  }
  return to_matrix(rows);
}

std::vector<int> read_labels_csv(const std::string& path, int n) {
  auto in = open(path);
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error(path + ": empty file");
  const auto cols = split_csv(header);
  const auto rows = read_rows(in, path);
  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  if (cols.size() == 1) {
    if (static_cast<int>(rows.size()) != n) throw std::runtime_error(path + ": label count != n");
    for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(rows[static_cast<std::size_t>(i)][0]);
  } else if (cols.size() == 2) {
    for (const auto& r : rows) {
      const auto node = static_cast<int>(r[0]);
      if (node < 0 || node >= n) throw std::runtime_error(path + ": node index out of range");
      labels[static_cast<std::size_t>(node)] = static_cast<int>(r[1]);
    }
  } else {
    throw std::runtime_error(path + ": expected columns 'label' or 'node,label'");
  }
  for (int l : labels) {
    if (l < 0) throw std::runtime_error(path + ": missing or negative label");
  }
  return labels;
}

Splits read_splits_json(const std::string& path) {
  auto in = open(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  Splits s;
  try {
    s.train = j.at("train").get<std::vector<int>>();
    s.val = j.at("val").get<std::vector<int>>();
    s.test = j.at("test").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": splits need integer arrays 'train', 'val', 'test'");
  }
  return s;
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  auto in = open(path);
  const auto rows = read_rows(in, path);
  if (rows.empty()) throw std::runtime_error(path + ": no rows");
  return to_matrix(rows);
}

void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m) {
  char buf[32];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      if (j > 0) os << ',';
      os << buf;
    }
    os << '\n';
  }
}

}  // namespace hypergcl
