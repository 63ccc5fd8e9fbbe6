#include "rsvol/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rsvol/error.hpp"
#include "rsvol/format.hpp"
#include "rsvol/parallel.hpp"

namespace rsvol {

int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("RSVOL_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
    throw Error(Errc::kConfigParse, "RSVOL_THREADS must be a positive integer");
  }
  return 1;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kFileNotFound, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ModelConfig parse_model_config(const std::string& json_text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(Errc::kConfigParse, std::string("model JSON: ") + e.what());
  }
  try {
    ModelConfig c;
    c.regimes = j.at("regimes").get<int>();
    const auto rows = j.at("generator").get<std::vector<std::vector<double>>>();
    c.generator.resize(static_cast<Eigen::Index>(rows.size()),
                       rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.front().size()) {
        throw Error(Errc::kDimensionMismatch, "generator rows differ in length");
      }
      for (std::size_t k = 0; k < rows[i].size(); ++k) {
        c.generator(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
      }
    }
    c.rates = j.at("rates").get<std::vector<double>>();
    c.dividends = j.at("dividends").get<std::vector<double>>();
    for (const auto& curve : j.at("vol_curves")) {
      std::vector<std::pair<double, double>> pts;
      for (const auto& p : curve) {
        const auto pair = p.get<std::vector<double>>();
        if (pair.size() != 2) throw Error(Errc::kConfigParse, "vol curve points are [y, sigma]");
        pts.emplace_back(pair[0], pair[1]);
      }
      c.vol_curves.push_back(std::move(pts));
    }
    c.sigma_min = j.value("sigma_min", c.sigma_min);
    c.sigma_max = j.value("sigma_max", c.sigma_max);
    return c;
  } catch (const json::exception& e) {
    throw Error(Errc::kConfigParse, std::string("model JSON: ") + e.what());
  }
}

RegimeModel load_model(const std::string& path) {
  return build_model(parse_model_config(read_file(path)));
}

namespace {

double to_double(const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw Error(Errc::kConfigParse, "not a number: '" + s + "'");
  }
  while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  if (pos != s.size()) throw Error(Errc::kConfigParse, "not a number: '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& part : split(text, ',')) out.push_back(to_double(trim(part)));
  if (out.empty()) throw Error(Errc::kConfigParse, "empty list");
  return out;
}

std::vector<double> parse_strikes(const std::string& text) {
  if (text.find(':') != std::string::npos) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw Error(Errc::kConfigParse, "strike range is lo:hi:count");
    const double lo = to_double(parts[0]), hi = to_double(parts[1]);
    const double count = to_double(parts[2]);
    if (!(lo > 0.0 && hi > lo) || count < 2 || count != std::floor(count)) {
      throw Error(Errc::kConfigParse, "strike range needs 0 < lo < hi and count >= 2");
    }
    std::vector<double> out;
    const int c = static_cast<int>(count);
    for (int k = 0; k < c; ++k) out.push_back(lo * std::pow(hi / lo, static_cast<double>(k) / (c - 1)));
    return out;
  }
  auto out = parse_list(text);
  for (double k : out) {
    if (!(k > 0.0)) throw Error(Errc::kConfigParse, "strikes must be positive");
  }
  return out;
}

GridData read_grid_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(Errc::kConfigParse, "empty CSV");
  auto header = split(line, ',');
  for (auto& h : header) h = trim(h);
  if (header.size() < 2 || (header[0] != "y" && header[0] != "K")) {
    throw Error(Errc::kConfigParse, "CSV must start with a y or K column");
  }
  GridData d;
  d.is_price = header[0] == "K";
  const bool has_tau = header[1] == "tau";
  const std::size_t first = has_tau ? 2 : 1;
  const std::size_t n = header.size() - first;
  if (n == 0) throw Error(Errc::kConfigParse, "CSV has no component columns");
  std::vector<std::vector<double>> rows;
  std::vector<double> taus;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) throw Error(Errc::kConfigParse, "ragged CSV row");
    std::vector<double> r;
    for (const auto& c : cells) r.push_back(to_double(trim(c)));
    taus.push_back(has_tau ? r[1] : 0.0);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw Error(Errc::kConfigParse, "CSV has no data rows");
  const double tmax = *std::max_element(taus.begin(), taus.end());
  d.components.assign(n, {});
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (taus[k] != tmax) continue;
    d.abscissa.push_back(rows[k][0]);
    for (std::size_t i = 0; i < n; ++i) d.components[i].push_back(rows[k][first + i]);
  }
  return d;
}

std::vector<double> to_grid(const GridData& data, const SpaceGrid& grid, int regimes) {
  if (static_cast<int>(data.components.size()) != regimes) {
    throw Error(Errc::kDimensionMismatch, "CSV component count differs from the regime count");
  }
  const std::size_t m = static_cast<std::size_t>(grid.size());
  std::vector<double> out(static_cast<std::size_t>(regimes) * m, 0.0);
  for (std::size_t r = 0; r < data.abscissa.size(); ++r) {
    const double a = data.abscissa[r];
    if (data.is_price && !(a > 0.0)) throw Error(Errc::kConfigParse, "strikes must be positive");
    const double y = data.is_price ? std::log(a) : a;
    const int k = grid.nearest(y);
    if (std::abs(grid.node(k) - y) > 1e-6 * grid.dy()) {
      throw Error(Errc::kShapeMismatch, "CSV abscissa " + format_double(a) + " is not a grid node");
    }
    for (int i = 0; i < regimes; ++i) {
      out[static_cast<std::size_t>(i) * m + static_cast<std::size_t>(k)] =
          data.components[static_cast<std::size_t>(i)][r];
    }
  }
  return out;
}

void write_profile_csv(std::ostream& os, const SpaceGrid& grid, const std::vector<double>& values,
                       int regimes) {
  os << "y";
  for (int i = 0; i < regimes; ++i) os << ",component_" << i + 1;
  os << '\n';
  const std::size_t m = static_cast<std::size_t>(grid.size());
  for (std::size_t k = 0; k < m; ++k) {
    os << format_double(grid.node(static_cast<int>(k)));
    for (int i = 0; i < regimes; ++i) os << ',' << format_double(values[static_cast<std::size_t>(i) * m + k]);
    os << '\n';
  }
}

}  // namespace rsvol
