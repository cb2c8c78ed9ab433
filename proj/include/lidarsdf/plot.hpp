// Copyright 2026 The lidarsdf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace lidarsdf {

/// Header plus rows of a comma-separated file.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

// Each plot is rendered only from the CSV written by the matching
// experiment; the data points are repeated in an SVG comment.

void plot_loss_history(const std::filesystem::path& csv, const std::filesystem::path& svg);
void plot_sweep(const std::filesystem::path& csv, const std::filesystem::path& svg);
void plot_scatter(const std::filesystem::path& csv, const std::filesystem::path& svg, const std::string& title);
void plot_bars(const std::filesystem::path& csv, const std::string& label_column, const std::string& value_column,
               const std::filesystem::path& svg, const std::string& title);

}  // namespace lidarsdf
