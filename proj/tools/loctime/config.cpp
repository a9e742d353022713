#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "loctime/errors.hpp"

namespace loctime::cli {

using nlohmann::json;

json to_json(const ExperimentConfig& c) {
  return json{{"kind", c.kind},         {"H", c.H},
              {"d", c.d},               {"N", c.N},
              {"eps", c.eps},           {"eps_schedule", c.eps_schedule},
              {"f", c.f},               {"tol", c.tol},
              {"max_order", c.max_order}, {"m", c.m},
              {"paths", c.paths},       {"seed", c.seed},
              {"generator", c.generator}, {"out", c.out}};
}

namespace {

template <typename T>
void read(const json& j, const char* key, T& field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config field '") + key + "': " + e.what());
  }
}

}  // namespace

ExperimentConfig from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  static const std::vector<std::string> known{"kind", "H", "d",   "N",     "eps",       "eps_schedule", "f",
                                              "tol",  "max_order", "m", "paths", "seed", "generator",    "out"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ValidationError("unknown config field '" + key + "'");
  ExperimentConfig c;
  read(j, "kind", c.kind);
  read(j, "H", c.H);
  read(j, "d", c.d);
  read(j, "N", c.N);
  read(j, "eps", c.eps);
  read(j, "eps_schedule", c.eps_schedule);
  read(j, "f", c.f);
  read(j, "tol", c.tol);
  read(j, "max_order", c.max_order);
  read(j, "m", c.m);
  read(j, "paths", c.paths);
  read(j, "seed", c.seed);
  read(j, "generator", c.generator);
  read(j, "out", c.out);
  return c;
}

std::string emit(const ExperimentConfig& c) { return to_json(c).dump(2); }

ExperimentConfig parse(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  // A run manifest carries its config under "config".
  if (j.is_object() && j.contains("config") && j.contains("version")) return from_json(j.at("config"));
  return from_json(j);
}

void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& what) { throw ValidationError(what); };
  if (std::find(kKinds.begin(), kKinds.end(), c.kind) == kKinds.end()) fail("unknown experiment kind '" + c.kind + "'");
  if (!(c.H > 0.0 && c.H < 1.0)) fail("H must lie in (0, 1)");
  if (c.d < 1) fail("d must be >= 1");
  if (c.N < 0) fail("N must be >= 0");
  if (!(c.eps >= 0.0) || !std::isfinite(c.eps)) fail("eps must be >= 0");
  if (c.eps_schedule.empty()) fail("eps_schedule must not be empty");
  for (double e : c.eps_schedule)
    if (!(e > 0.0) || !std::isfinite(e)) fail("eps_schedule entries must be > 0");
  if (!(c.tol > 0.0)) fail("tol must be > 0");
  if (c.max_order < 0) fail("max_order must be >= 0");
  if (c.kind == "kernels" && c.max_order < c.N) fail("max_order must be >= N");
  if (c.m < 2 || c.m % 2 != 0) fail("m must be even and >= 2");
  if (c.paths < 2) fail("paths must be >= 2");
  if (c.generator != "whitenoise" && c.generator != "cholesky") fail("generator must be whitenoise or cholesky");
  if (c.out.empty()) fail("out must name a directory");
  parse_test_function(c.f, c.d);
}

namespace {

std::map<std::string, double> parse_params(const std::string& body, const std::string& family,
                                           const std::vector<std::string>& allowed) {
  std::map<std::string, double> out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ValidationError("test function parameter '" + item + "' needs key=value");
    const std::string key = item.substr(0, eq);
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ValidationError("unknown " + family + " parameter '" + key + "'");
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item.substr(eq + 1), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() - eq - 1) throw ValidationError("bad number in '" + item + "'");
    out[key] = v;
  }
  return out;
}

TestFunction parse_component(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string family = spec.substr(0, colon);
  const std::string body = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (family == "zero") {
    if (!body.empty()) throw ValidationError("zero takes no parameters");
    return TestFunction::zero();
  }
  if (family == "gaussian") {
    auto p = parse_params(body, family, {"amp", "center", "width"});
    const double width = p.count("width") ? p["width"] : 0.25;
    if (!(width > 0.0)) throw ValidationError("gaussian width must be > 0");
    return TestFunction::gaussian_bump(p.count("amp") ? p["amp"] : 0.1, p.count("center") ? p["center"] : 0.5, width);
  }
  if (family == "hermite") {
    auto p = parse_params(body, family, {"n", "amp", "center", "scale"});
    const double n = p.count("n") ? p["n"] : 0.0;
    if (n < 0.0 || n != std::floor(n) || n > 40.0) throw ValidationError("hermite n must be an integer in [0, 40]");
    const double scale = p.count("scale") ? p["scale"] : 0.25;
    if (!(scale > 0.0)) throw ValidationError("hermite scale must be > 0");
    return TestFunction::hermite(static_cast<unsigned>(n), p.count("amp") ? p["amp"] : 0.1,
                                 p.count("center") ? p["center"] : 0.5, scale);
  }
  throw ValidationError("unknown test function family '" + family + "' (zero, gaussian, hermite)");
}

}  // namespace

VectorTestFunction parse_test_function(const std::string& spec, int d) {
  if (d < 1) throw ValidationError("d must be >= 1");
  std::vector<TestFunction> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ';')) parts.push_back(parse_component(item));
  if (parts.empty()) throw ValidationError("empty test function spec");
  if (parts.size() == 1) parts.assign(static_cast<std::size_t>(d), parts.front());
  if (static_cast<int>(parts.size()) != d)
    throw ValidationError("test function has " + std::to_string(parts.size()) + " components but d = " + std::to_string(d));
  return VectorTestFunction(std::move(parts));
}

}  // namespace loctime::cli
