#pragma once

#include <boost/math/policies/policy.hpp>

namespace draftval::detail {

// Special-function policy for hot loops: report poles/overflow as IEEE values
// instead of throwing, and stay in double precision.
using quiet_policy = boost::math::policies::policy<
    boost::math::policies::domain_error<boost::math::policies::ignore_error>,
    boost::math::policies::pole_error<boost::math::policies::ignore_error>,
    boost::math::policies::overflow_error<boost::math::policies::ignore_error>,
    boost::math::policies::evaluation_error<boost::math::policies::ignore_error>,
    boost::math::policies::promote_double<false>>;

}  // namespace draftval::detail
