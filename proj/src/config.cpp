#include "config.hpp"

#include <cmath>
#include <cstddef>
#include <utility>

namespace rsopt {
namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

// Split on '+' separators; a '+' directly after e/E belongs to a number.
std::vector<std::string> split_sum(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() ||
        (s[i] == '+' && i > 0 && s[i - 1] != 'e' && s[i - 1] != 'E')) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ValidationError("cannot parse " + what + " from '" + s + "'");
  }
}

long to_count(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ValidationError("cannot parse " + what + " from '" + s + "'");
  }
}

struct KvList {
  std::vector<std::pair<std::string, std::string>> items;

  std::string take(const std::string& key, const std::string& part) {
    for (auto it = items.begin(); it != items.end(); ++it) {
      if (it->first == key) {
        std::string v = it->second;
        items.erase(it);
        return v;
      }
    }
    throw ValidationError("noise spec '" + part + "' is missing " + key + "=");
  }

  void expect_empty(const std::string& part) const {
    if (!items.empty())
      throw ValidationError("noise spec '" + part + "' has unknown key '" +
                            items.front().first + "'");
  }
};

KvList parse_kv(const std::string& args, const std::string& part) {
  KvList kv;
  if (args.empty()) return kv;
  for (const auto& item : split(args, ',')) {
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos)
      throw ValidationError("noise spec '" + part +
                            "' expects key=value items, got '" + item + "'");
    kv.items.emplace_back(item.substr(0, eq), item.substr(eq + 1));
  }
  return kv;
}

NoiseModel parse_one_noise(const std::string& part, Eigen::Index dim) {
  const std::size_t colon = part.find(':');
  const std::string name = part.substr(0, colon);
  KvList kv = parse_kv(
      colon == std::string::npos ? "" : part.substr(colon + 1), part);
  if (name == "zero") {
    kv.expect_empty(part);
    return NoiseModel::zero();
  }
  if (name == "gaussian") {
    const double s2 = to_double(kv.take("sigma2", part), "sigma2");
    kv.expect_empty(part);
    return NoiseModel::isotropic_gaussian(s2, dim);
  }
  if (name == "biased") {
    const double s2 = to_double(kv.take("sigma2", part), "sigma2");
    const double M = to_double(kv.take("M", part), "M");
    kv.expect_empty(part);
    Vector<double> bias = Vector<double>::Zero(dim);
    bias(0) = M;
    return NoiseModel::biased_gaussian(s2, {bias}, M);
  }
  if (name == "adversarial") {
    const double delta = to_double(kv.take("delta", part), "delta");
    const long n = to_count(kv.take("n", part), "n");
    kv.expect_empty(part);
    return NoiseModel::adversarial_ball(delta, int(n));
  }
  if (name == "minibatch") {
    const long b = to_count(kv.take("b", part), "b");
    kv.expect_empty(part);
    return NoiseModel::minibatch(b);
  }
  throw ValidationError(
      "unknown noise model '" + name +
      "' (expected zero|gaussian|biased|adversarial|minibatch)");
}

}  // namespace

Vector<double> parse_eigenvalue_list(const std::string& text) {
  const auto items = split(text, ',');
  Vector<double> out(static_cast<Eigen::Index>(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = to_double(items[i], "eigenvalue");
  return out;
}

NoiseModel parse_noise_spec(const std::string& text, Eigen::Index dim) {
  if (text.empty()) throw ValidationError("empty noise spec");
  if (dim <= 0) throw ValidationError("noise spec: dimension must be > 0");
  const auto parts = split_sum(text);
  if (parts.size() == 1) return parse_one_noise(parts[0], dim);
  std::vector<NoiseModel> models;
  models.reserve(parts.size());
  for (const auto& p : parts) models.push_back(parse_one_noise(p, dim));
  return NoiseModel::sum(std::move(models));
}

std::vector<double> parse_theta_grid(const std::string& text) {
  if (text.empty()) throw ValidationError("empty theta grid spec");
  const bool lin = text.rfind("lin:", 0) == 0;
  const bool log = text.rfind("log:", 0) == 0;
  if (lin || log) {
    const auto f = split(text.substr(4), ':');
    if (f.size() != 3)
      throw ValidationError("theta grid '" + text +
                            "' must be lin:<lo>:<hi>:<n> or log:<lo>:<hi>:<n>");
    const double lo = to_double(f[0], "grid lo");
    const double hi = to_double(f[1], "grid hi");
    const long n = to_count(f[2], "grid n");
    if (n < 2) throw ValidationError("theta grid: need n >= 2");
    if (log && (!(lo > 0) || !(hi > 0)))
      throw ValidationError("theta grid: log spacing needs lo, hi > 0");
    std::vector<double> out;
    out.reserve(std::size_t(n));
    for (long i = 0; i < n; ++i) {
      const double t = double(i) / double(n - 1);
      out.push_back(log ? std::exp(std::log(lo) + t * (std::log(hi) -
                                                       std::log(lo)))
                        : lo + t * (hi - lo));
    }
    return out;
  }
  std::vector<double> out;
  for (const auto& item : split(text, ','))
    out.push_back(to_double(item, "theta"));
  return out;
}

}  // namespace rsopt
