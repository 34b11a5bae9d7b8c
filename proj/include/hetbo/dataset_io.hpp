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

#pragma once

#include "hetbo/gp.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace hetbo::io {

/// Comma-separated cells with surrounding whitespace trimmed.
std::vector<std::string> split_csv_line(const std::string& line);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;  // 1-based source line of each row

  /// Column index, or -1.
  int column(const std::string& name) const;
};

/// Reads a headed CSV, skipping blank lines. Throws InvalidInput (with the
/// line number) on rows wider than the header.
CsvTable read_csv(std::istream& in);

/// Parses a number; empty cells and "nan" give NaN. Throws InvalidInput naming
/// the line on anything else.
double parse_number(const std::string& cell, int line_number, const std::string& column);

struct LoadedDataset {
  gp::Dataset data;
  std::vector<std::string> feature_columns;  // x*, f* or "smiles"
  int num_tasks = 0;                         // 0 for single-task data
};

/// Columns: `x0..x{d-1}` (real inputs), `f0..f{m-1}` (count inputs) or
/// `smiles` (strings); target `y`, optional `noise_std`, optional `task`.
/// Multitask data may instead be wide, with targets `y0..y{P-1}`; rows whose
/// task label is missing (empty or NaN) are skipped.
LoadedDataset read_dataset_csv(std::istream& in);
LoadedDataset read_dataset_file(const std::string& path);

/// Inputs only (x0.., f0.. or smiles, plus an optional task column); any target
/// columns are ignored.
kernels::Inputs read_inputs_csv(std::istream& in);
kernels::Inputs read_inputs_file(const std::string& path);

/// Writes `x0..`/`f0..`/`smiles`, `y`, and `noise_std`/`task` when present.
void write_dataset_csv(std::ostream& out, const gp::Dataset& data);

}  // namespace hetbo::io
