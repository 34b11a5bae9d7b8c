/*
 * Copyright 2026 The hetbo Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#include "hetbo/dataset_io.hpp"

#include "hetbo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace hetbo::io {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Indices of the columns `prefix0..prefix{k-1}`, in order; empty if none.
std::vector<int> numbered_columns(const CsvTable& t, const std::string& prefix) {
  std::vector<int> cols;
  for (int k = 0;; ++k) {
    const int c = t.column(prefix + std::to_string(k));
    if (c < 0) break;
    cols.push_back(c);
  }
  return cols;
}

const std::string& cell(const CsvTable& t, std::size_t row, int col) {
  static const std::string empty;
  const auto& r = t.rows[row];
  return col < static_cast<int>(r.size()) ? r[static_cast<std::size_t>(col)] : empty;
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(current);
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  out.push_back(current);
  for (auto& c : out) {
    const auto a = c.find_first_not_of(" \t\r");
    const auto b = c.find_last_not_of(" \t\r");
    c = a == std::string::npos ? std::string() : c.substr(a, b - a + 1);
  }
  return out;
}

int CsvTable::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_csv_line(line);
    if (!have_header) {
      t.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() > t.header.size()) {
      throw InvalidInput("line " + std::to_string(line_no) + ": " + std::to_string(cells.size()) +
                         " fields but the header has " + std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(line_no);
  }
  if (!have_header) throw InvalidInput("CSV input is empty");
  return t;
}

double parse_number(const std::string& s, int line_number, const std::string& column) {
  if (s.empty() || s == "nan" || s == "NaN" || s == "NA") return kNaN;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) {
    throw InvalidInput("line " + std::to_string(line_number) + ": column '" + column + "': cannot parse '" + s + "'");
  }
  return v;
}

LoadedDataset read_dataset_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  LoadedDataset out;
  const std::vector<int> xs = numbered_columns(t, "x");
  const std::vector<int> fs = numbered_columns(t, "f");
  const int c_smiles = t.column("smiles");
  const int kinds = (xs.empty() ? 0 : 1) + (fs.empty() ? 0 : 1) + (c_smiles < 0 ? 0 : 1);
  if (kinds != 1) throw InvalidInput("dataset needs exactly one input group: x0.., f0.. or smiles");
  const int c_y = t.column("y");
  const std::vector<int> ys = numbered_columns(t, "y");
  const int c_noise = t.column("noise_std");
  const int c_task = t.column("task");
  if (c_y < 0 && ys.empty()) throw InvalidInput("dataset needs a 'y' column (or y0.. for wide multitask data)");
  if (c_y >= 0 && !ys.empty()) throw InvalidInput("dataset has both 'y' and numbered y columns");

  const bool wide = c_y < 0;
  const bool multitask = wide || c_task >= 0;
  std::vector<int> input_cols = !xs.empty() ? xs : fs;
  for (int c : input_cols) out.feature_columns.push_back(t.header[static_cast<std::size_t>(c)]);
  if (c_smiles >= 0) out.feature_columns.push_back("smiles");

  std::vector<std::vector<double>> feats;
  std::vector<std::string> strings;
  std::vector<double> targets, noise;
  std::vector<int> tasks;
  int max_task = -1;
  auto add = [&](std::size_t r, double y, int task) {
    const int line = t.line_numbers[r];
    if (c_smiles >= 0) {
      strings.push_back(cell(t, r, c_smiles));
    } else {
      std::vector<double> row;
      for (int c : input_cols) {
        const double v = parse_number(cell(t, r, c), line, t.header[static_cast<std::size_t>(c)]);
        if (!std::isfinite(v)) throw InvalidInput("line " + std::to_string(line) + ": missing input value");
        if (!fs.empty() && v < 0.0) throw InvalidInput("line " + std::to_string(line) + ": count features must be non-negative");
        row.push_back(v);
      }
      feats.push_back(std::move(row));
    }
    targets.push_back(y);
    if (c_noise >= 0) {
      const double ns = parse_number(cell(t, r, c_noise), line, "noise_std");
      if (!(ns >= 0.0)) throw InvalidInput("line " + std::to_string(line) + ": noise_std must be non-negative");
      noise.push_back(ns);
    }
    if (multitask) {
      tasks.push_back(task);
      max_task = std::max(max_task, task);
    }
  };

  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const int line = t.line_numbers[r];
    if (wide) {
      for (std::size_t p = 0; p < ys.size(); ++p) {
        const double y = parse_number(cell(t, r, ys[p]), line, t.header[static_cast<std::size_t>(ys[p])]);
        if (std::isnan(y)) continue;
        add(r, y, static_cast<int>(p));
      }
      continue;
    }
    const double y = parse_number(cell(t, r, c_y), line, "y");
    if (multitask) {
      const double task = parse_number(cell(t, r, c_task), line, "task");
      if (std::isnan(task) || std::isnan(y)) continue;
      if (task < 0 || task != std::floor(task)) throw InvalidInput("line " + std::to_string(line) + ": invalid task index");
      add(r, y, static_cast<int>(task));
      continue;
    }
    if (!std::isfinite(y)) throw InvalidInput("line " + std::to_string(line) + ": missing or non-finite target");
    add(r, y, -1);
  }
  if (targets.empty()) throw InvalidInput("dataset contains no usable rows");

  const auto n = static_cast<Eigen::Index>(targets.size());
  kernels::Inputs inputs;
  if (c_smiles >= 0) {
    inputs = kernels::Inputs::text(std::move(strings));
  } else {
    Eigen::MatrixXd m(n, static_cast<Eigen::Index>(input_cols.size()));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = feats[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    inputs = fs.empty() ? kernels::Inputs::real(std::move(m)) : kernels::Inputs::counts(std::move(m));
  }
  if (multitask) {
    inputs = inputs.with_tasks(tasks);
    out.num_tasks = wide ? static_cast<int>(ys.size()) : max_task + 1;
  }
  out.data.inputs = std::move(inputs);
  out.data.targets = Eigen::Map<Eigen::VectorXd>(targets.data(), n);
  if (c_noise >= 0) out.data.noise_std = Eigen::Map<Eigen::VectorXd>(noise.data(), n);
  out.data.validate();
  return out;
}

LoadedDataset read_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open dataset '" + path + "'");
  try {
    return read_dataset_csv(in);
  } catch (const InvalidInput& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

kernels::Inputs read_inputs_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  const std::vector<int> xs = numbered_columns(t, "x");
  const std::vector<int> fs = numbered_columns(t, "f");
  const int c_smiles = t.column("smiles");
  const int c_task = t.column("task");
  const int kinds = (xs.empty() ? 0 : 1) + (fs.empty() ? 0 : 1) + (c_smiles < 0 ? 0 : 1);
  if (kinds != 1) throw InvalidInput("inputs need exactly one column group: x0.., f0.. or smiles");
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  if (n == 0) throw InvalidInput("input file has no rows");
  kernels::Inputs inputs;
  if (c_smiles >= 0) {
    std::vector<std::string> strings;
    for (std::size_t r = 0; r < t.rows.size(); ++r) strings.push_back(cell(t, r, c_smiles));
    inputs = kernels::Inputs::text(std::move(strings));
  } else {
    const std::vector<int>& cols = xs.empty() ? fs : xs;
    Eigen::MatrixXd m(n, static_cast<Eigen::Index>(cols.size()));
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto r = static_cast<std::size_t>(i);
      for (std::size_t j = 0; j < cols.size(); ++j) {
        const double v = parse_number(cell(t, r, cols[j]), t.line_numbers[r], t.header[static_cast<std::size_t>(cols[j])]);
        if (!std::isfinite(v)) throw InvalidInput("line " + std::to_string(t.line_numbers[r]) + ": missing input value");
        m(i, static_cast<Eigen::Index>(j)) = v;
      }
    }
    inputs = xs.empty() ? kernels::Inputs::counts(std::move(m)) : kernels::Inputs::real(std::move(m));
  }
  if (c_task >= 0) {
    std::vector<int> tasks;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const double v = parse_number(cell(t, r, c_task), t.line_numbers[r], "task");
      if (!(v >= 0.0) || v != std::floor(v)) throw InvalidInput("line " + std::to_string(t.line_numbers[r]) + ": invalid task index");
      tasks.push_back(static_cast<int>(v));
    }
    inputs = inputs.with_tasks(std::move(tasks));
  }
  return inputs;
}

kernels::Inputs read_inputs_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open input file '" + path + "'");
  try {
    return read_inputs_csv(in);
  } catch (const InvalidInput& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

void write_dataset_csv(std::ostream& out, const gp::Dataset& data) {
  const auto& in = data.inputs;
  const auto old = out.precision(17);
  if (in.kind == kernels::InputKind::String) {
    out << "smiles";
  } else {
    const char* prefix = in.kind == kernels::InputKind::Count ? "f" : "x";
    for (Eigen::Index j = 0; j < in.points.cols(); ++j) out << (j ? "," : "") << prefix << j;
  }
  out << ",y";
  if (data.noise_std) out << ",noise_std";
  if (in.multitask()) out << ",task";
  out << '\n';
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    if (in.kind == kernels::InputKind::String) {
      out << in.strings[static_cast<std::size_t>(i)];
    } else {
      for (Eigen::Index j = 0; j < in.points.cols(); ++j) out << (j ? "," : "") << in.points(i, j);
    }
    out << ',' << data.targets[i];
    if (data.noise_std) out << ',' << (*data.noise_std)[i];
    if (in.multitask()) out << ',' << in.tasks[static_cast<std::size_t>(i)];
    out << '\n';
  }
  out.precision(old);
}

}  // namespace hetbo::io
