#include "msl/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

namespace msl {

double normal_quantile(double prob) {
    static const boost::math::normal_distribution<double> norm;
    return boost::math::quantile(norm, prob);
}

double chi_squared_sf(double x, int dof) {
    const boost::math::chi_squared_distribution<double> dist(dof);
    return boost::math::cdf(boost::math::complement(dist, x));
}

}  // namespace msl
