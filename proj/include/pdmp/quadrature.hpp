#ifndef PDMP_QUADRATURE_HPP
#define PDMP_QUADRATURE_HPP

#include <vector>

#include <boost/math/quadrature/gauss.hpp>

namespace pdmp {

struct QuadNode {
  double x;
  double w;
};

/// Composite 8-point Gauss-Legendre rule on [a, b] with `panels` panels,
/// nodes in increasing order.
inline std::vector<QuadNode> composite_gauss_legendre(double a, double b, int panels) {
  using Rule = boost::math::quadrature::gauss<double, 8>;
  const auto& abscissa = Rule::abscissa();
  const auto& weights = Rule::weights();
  std::vector<QuadNode> nodes;
  nodes.reserve(static_cast<std::size_t>(panels) * 8);
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    const double half = 0.5 * h;
    for (std::size_t i = abscissa.size(); i-- > 0;) nodes.push_back({mid - half * abscissa[i], half * weights[i]});
    for (std::size_t i = 0; i < abscissa.size(); ++i) nodes.push_back({mid + half * abscissa[i], half * weights[i]});
  }
  return nodes;
}

}  // namespace pdmp

#endif  // PDMP_QUADRATURE_HPP
