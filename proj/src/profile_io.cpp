#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/os.h>

#include "choquard/exponents.hpp"
#include "choquard/radial.hpp"

namespace choquard {

void write_profile_csv(const std::string& path, const RadialProfile& f) {
  auto out = fmt::output_file(path);
  out.print("r,value\n");
  for (std::size_t i = 0; i < f.size(); ++i) {
    out.print("{:.17g},{:.17g}\n", f.grid.r[i], f.values[i]);
  }
}

nlohmann::json annotations_json(const RadialProfile& f) {
  nlohmann::json tail;
  switch (f.tail.kind) {
    case TailModel::Kind::Zero: tail = {{"kind", "zero"}}; break;
    case TailModel::Kind::ExpDecay:
      tail = {{"kind", "exp_decay"}, {"rate", f.tail.rate}, {"power", f.tail.power}};
      break;
    case TailModel::Kind::PowerLaw: tail = {{"kind", "power_law"}, {"power", f.tail.power}}; break;
  }
  return {{"origin_exponent", f.origin_exponent ? nlohmann::json(*f.origin_exponent) : nlohmann::json(nullptr)},
          {"tail_model", tail}};
}

RadialProfile read_profile_csv(const std::string& path, int points_per_decade) {
  std::ifstream in(path);
  if (!in) throw DomainError(fmt::format("cannot open {}", path));
  std::string line;
  std::getline(in, line);
  if (line != "r,value") throw DomainError(fmt::format("{}: expected header 'r,value'", path));
  std::vector<double> r, v;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw DomainError(fmt::format("{}: malformed row '{}'", path, line));
    r.push_back(std::stod(line.substr(0, comma)));
    v.push_back(std::stod(line.substr(comma + 1)));
  }
  if (r.size() < 2) throw DomainError(fmt::format("{}: need at least two rows", path));
  RadialProfile f;
  f.grid.r = r;
  f.grid.r_min = r.front();
  f.grid.r_max = r.back();
  f.grid.points_per_decade = points_per_decade;
  f.grid.ratio = std::pow(r.back() / r.front(), 1.0 / double(r.size() - 1));
  f.values = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  validate(f);
  return f;
}

}  // namespace choquard
