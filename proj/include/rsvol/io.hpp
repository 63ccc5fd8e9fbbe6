#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rsvol/grid.hpp"
#include "rsvol/model.hpp"

namespace rsvol {

/// Keys: regimes, generator (row-major), rates, dividends, vol_curves (one
/// list of [y, sigma] pairs per regime), optional sigma_min and sigma_max.
ModelConfig parse_model_config(const std::string& json_text);
RegimeModel load_model(const std::string& path);

std::string read_file(const std::string& path);

/// "0.8,1.0,1.2" or "lo:hi:count" (count points uniform in log K).
std::vector<double> parse_strikes(const std::string& text);

/// Comma-separated reals.
std::vector<double> parse_list(const std::string& text);

struct GridData {
  bool is_price = false;  // first column K (observed prices) instead of y
  std::vector<double> abscissa;
  std::vector<std::vector<double>> components;
};

/// CSV whose first column is y or K, an optional tau column, then one column
/// per regime. Only the rows of the largest tau are kept.
GridData read_grid_csv(std::istream& is);

/// Places samples on grid nodes (n * m, zero elsewhere); every abscissa must
/// match a node.
std::vector<double> to_grid(const GridData& data, const SpaceGrid& grid, int regimes);

/// CSV y,component_1..n of an n * m vector.
void write_profile_csv(std::ostream& os, const SpaceGrid& grid, const std::vector<double>& values,
                       int regimes);

}  // namespace rsvol
