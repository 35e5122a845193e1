#include "lnpr/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lnpr/error.hpp"

namespace lnpr {

void Trace::mask_interval(double start_s, double end_s) {
  if (masked.empty()) masked.assign(time_s.size(), false);
  for (std::size_t i = 0; i < time_s.size(); ++i) {
    if (time_s[i] >= start_s && time_s[i] <= end_s) masked[i] = true;
  }
}

std::vector<std::pair<double, double>> Trace::masked_intervals() const {
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < masked.size(); ++i) {
    if (!masked[i]) continue;
    if (i > 0 && masked[i - 1]) {
      out.back().second = time_s[i];
    } else {
      out.emplace_back(time_s[i], time_s[i]);
    }
  }
  return out;
}

void Trace::validate() const {
  if (value.size() != time_s.size()) {
    throw ValidationError("trace: time and value columns differ in length");
  }
  if (!masked.empty() && masked.size() != time_s.size()) {
    throw ValidationError("trace: mask length differs from time column");
  }
  for (std::size_t i = 0; i < time_s.size(); ++i) {
    if (!std::isfinite(time_s[i]) || !std::isfinite(value[i])) {
      throw ValidationError("trace: non-finite value at sample " + std::to_string(i));
    }
    if (i > 0 && !(time_s[i] > time_s[i - 1])) {
      throw ValidationError("trace: time not strictly increasing at sample " +
                            std::to_string(i));
    }
  }
}

void SweepData::validate() const {
  if (value.size() != abscissa.size()) {
    throw ValidationError("sweep: abscissa and value columns differ in length");
  }
  if (sigma && sigma->size() != abscissa.size()) {
    throw ValidationError("sweep: sigma column differs in length");
  }
  for (std::size_t i = 0; i < abscissa.size(); ++i) {
    if (!std::isfinite(abscissa[i]) || !std::isfinite(value[i]) ||
        (sigma && !std::isfinite((*sigma)[i]))) {
      throw ValidationError("sweep: non-finite value at point " + std::to_string(i));
    }
    if (sigma && !((*sigma)[i] > 0.0)) {
      throw ValidationError("sweep: sigma must be > 0 at point " + std::to_string(i));
    }
    if (i > 0 && abscissa[i] < abscissa[i - 1]) {
      throw ValidationError("sweep: abscissa not ascending at point " + std::to_string(i));
    }
  }
}

bool SweepData::sort_by_abscissa() {
  std::vector<std::size_t> order(abscissa.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return abscissa[i] < abscissa[j]; });
  if (std::is_sorted(order.begin(), order.end())) return false;
  auto permute = [&order](std::vector<double>& v) {
    std::vector<double> out;
    out.reserve(v.size());
    for (auto i : order) out.push_back(v[i]);
    v = std::move(out);
  };
  permute(abscissa);
  permute(value);
  if (sigma) permute(*sigma);
  return true;
}

}  // namespace lnpr
