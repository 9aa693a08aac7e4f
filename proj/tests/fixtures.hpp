#pragma once

#include <memory>

#include "amo/arith.hpp"

namespace fixture {

inline std::shared_ptr<const amo::arith::Frequency> golden(int depth = 40) {
  const auto pa = amo::arith::parse_alpha("golden");
  return std::make_shared<const amo::arith::Frequency>(amo::arith::cf_expand(pa.value, depth, pa.digits));
}

// beta_hat = 1 synthesized frequency with the default cap
inline std::shared_ptr<const amo::arith::Frequency> liouville_beta1() {
  return std::make_shared<const amo::arith::Frequency>(
      amo::arith::cf_synthesize(1.0, amo::arith::BigInt("1000000000000000")));
}

}  // namespace fixture
