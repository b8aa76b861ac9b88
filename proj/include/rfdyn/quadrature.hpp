#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rfdyn {

class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double achieved)
        : std::runtime_error(what + " (achieved " + std::to_string(achieved) + ")"), achieved_(achieved) {}
    double achieved() const { return achieved_; }

private:
    double achieved_;
};

struct GaussRule {
    std::vector<double> x;  // nodes on [-1, 1]
    std::vector<double> w;
};

// n-point Gauss-Legendre rule (Newton iteration on P_n).
GaussRule gauss_legendre(int n);

// Nodes and weights of `panels` equal panels of the n-point rule on [a, b].
GaussRule composite_rule(double a, double b, int panels, int n = 16);

// Composite Gauss-Legendre on [a, b], doubling the panel count from `panels0`
// until successive estimates differ by less than `tol`.
double integrate(const std::function<double(double)>& f, double a, double b, double tol, int panels0 = 2,
                 int max_panels = 1 << 16);

}  // namespace rfdyn
