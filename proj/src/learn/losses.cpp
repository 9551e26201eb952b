#include "optit/learn/losses.hpp"

namespace optit::learn {

LossVariant loss_variant_from_string(const std::string& s) {
  if (s == "optit") return LossVariant::optit;
  if (s == "exit_sampled_seq") return LossVariant::exit_sampled_seq;
  if (s == "exit_sampled_indep") return LossVariant::exit_sampled_indep;
  if (s == "exit_exact_indep") return LossVariant::exit_exact_indep;
  if (s == "mean_ce") return LossVariant::mean_ce;
  throw std::invalid_argument("unknown loss variant: " + s);
}

std::string to_string(LossVariant v) {
  switch (v) {
    case LossVariant::optit: return "optit";
    case LossVariant::exit_sampled_seq: return "exit_sampled_seq";
    case LossVariant::exit_sampled_indep: return "exit_sampled_indep";
    case LossVariant::exit_exact_indep: return "exit_exact_indep";
    case LossVariant::mean_ce: return "mean_ce";
  }
  return "?";
}

}  // namespace optit::learn
