#include "entroute/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <string>

#include "entroute/errors.hpp"

namespace entroute {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

constexpr double kMassTolerance = 1e-6;

}  // namespace

std::string_view to_string(Mode m) noexcept {
  switch (m) {
    case Mode::Direct: return "direct";
    case Mode::Standard: return "standard";
    case Mode::CoT: return "cot";
  }
  return "standard";
}

Mode parse_mode(std::string_view text) {
  const std::string t = lower(text);
  if (t == "direct" || t == "d") return Mode::Direct;
  if (t == "standard" || t == "s") return Mode::Standard;
  if (t == "cot" || t == "c") return Mode::CoT;
  throw ValidationError("unknown mode '" + std::string(text) + "'");
}

std::string_view to_string(RoutingReason r) noexcept {
  switch (r) {
    case RoutingReason::DivergenceRule: return "divergence";
    case RoutingReason::OverloadRule: return "overload";
    case RoutingReason::ConvergenceRule: return "convergence";
    case RoutingReason::DefaultStandard: return "default_standard";
    case RoutingReason::EarlyStop: return "early_stop";
    case RoutingReason::LearnedRouter: return "learned";
  }
  return "default_standard";
}

RoutingReason parse_reason(std::string_view text) {
  const std::string t = lower(text);
  if (t == "divergence") return RoutingReason::DivergenceRule;
  if (t == "overload") return RoutingReason::OverloadRule;
  if (t == "convergence") return RoutingReason::ConvergenceRule;
  if (t == "default_standard") return RoutingReason::DefaultStandard;
  if (t == "early_stop") return RoutingReason::EarlyStop;
  if (t == "learned") return RoutingReason::LearnedRouter;
  throw ValidationError("unknown routing reason '" + std::string(text) + "'");
}

void validate(const RoutingDecision& decision) {
  if (decision.reason == RoutingReason::EarlyStop && decision.mode != Mode::Standard) {
    throw ValidationError("early-stop decision for '" + decision.instance_id + "' must route Standard");
  }
}

TokenDistribution::TokenDistribution(std::vector<double> probabilities, bool truncated, double residual_mass)
    : probabilities_(std::move(probabilities)), truncated_(truncated), residual_mass_(residual_mass) {
  if (probabilities_.empty()) throw ValidationError("token distribution has no candidates");
  for (double p : probabilities_) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("probability outside [0, 1]");
  }
  if (!(residual_mass_ >= 0.0 && residual_mass_ <= 1.0)) throw ValidationError("residual mass outside [0, 1]");
  if (!truncated_ && residual_mass_ != 0.0) {
    throw ValidationError("residual mass must be 0 for a full distribution");
  }
  const double total = std::accumulate(probabilities_.begin(), probabilities_.end(), 0.0) + residual_mass_;
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw ValidationError("probability mass sums to " + std::to_string(total) + ", expected 1");
  }
}

TokenDistribution TokenDistribution::from_top_logprobs(const std::vector<double>& logprobs) {
  std::vector<double> probs;
  probs.reserve(logprobs.size());
  double sum = 0.0;
  for (double lp : logprobs) {
    if (std::isnan(lp) || lp > 1e-9) throw ValidationError("log-probability must be <= 0");
    const double p = std::min(1.0, std::exp(lp));
    probs.push_back(p);
    sum += p;
  }
  if (sum > 1.0) {
    for (double& p : probs) p /= sum;
    return TokenDistribution(std::move(probs), true, 0.0);
  }
  return TokenDistribution(std::move(probs), true, 1.0 - sum);
}

EntropyTrace::EntropyTrace(std::string instance_id, std::string dataset_id, std::size_t probe_length,
                           std::vector<double> values, bool approximate)
    : instance_id_(std::move(instance_id)),
      dataset_id_(std::move(dataset_id)),
      probe_length_(probe_length),
      values_(std::move(values)),
      approximate_(approximate) {
  if (probe_length_ == 0) throw ValidationError("probe_length must be >= 1");
  if (values_.size() > probe_length_) {
    throw ValidationError("trace '" + instance_id_ + "' has " + std::to_string(values_.size()) +
                          " entropies but probe_length is " + std::to_string(probe_length_));
  }
  for (double h : values_) {
    if (!std::isfinite(h) || h < 0.0) {
      throw ValidationError("trace '" + instance_id_ + "' has a negative or non-finite entropy");
    }
  }
}

}  // namespace entroute
