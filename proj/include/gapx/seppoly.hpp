#pragma once

#include <span>
#include <string>
#include <vector>

namespace gapx {

// One monomial coeff * prod x_i^{exps[i]} of a homogeneous component.
struct MonomialTerm {
    std::vector<unsigned> exps;
    double coeff;
};

// i-homogeneous component p_i of the separating polynomial p.
struct PComponent {
    unsigned degree = 0;
    std::vector<MonomialTerm> terms;

    double eval(std::span<const double> y) const;
    void grad(std::span<const double> y, std::span<double> out) const;
};

// The even polynomial q = scale * sum_i p_i^2 together with the certified
// constants the rest of the pipeline consumes:
//   eta  : lower bound of q on the unit sphere after scaling (>= 1)
//   Ai   : sup of scale * p_i^2 over the unit ball, indexed by component
//   K1   : sum of Ai, so q(y) <= K1 * max(||y||, ||y||^{2n})
//   M    : upper bound of q on G-G (>= 1)
//   Lq   : Lipschitz constant of q on the radius-2R ball
class SepPolyQ {
public:
    enum class Kind { euclidean4, quartic_sum, generic };

    // q(y) = ||y||^4, from p(x) = ||x||^2 (n = 2).
    static SepPolyQ euclidean4(int dim);
    // q(y) = d^2 (sum_i y_i^4)^2, from p(x) = sum_i x_i^4 (n = 4); the d^2
    // scaling makes the sphere infimum exactly 1.
    static SepPolyQ quartic_sum(int dim);
    // User-supplied components; eta estimated by dense sphere sampling with a
    // safety multiplier. Throws ConfigError if the sampled sphere infimum is
    // not strictly positive (p not separating on this instance).
    static SepPolyQ from_components(int dim, std::vector<PComponent> p_components,
                                    std::size_t sphere_samples = 200000, double safety = 1.05);

    double operator()(std::span<const double> y) const;

    int dim() const { return dim_; }
    unsigned n_half() const { return n_half_; }  // n = degree of p
    unsigned degree() const { return 2 * n_half_; }
    double scale() const { return scale_; }
    double eta() const { return eta_; }
    Kind kind() const { return kind_; }
    const std::vector<PComponent>& components() const { return p_; }

    bool constants_ready() const { return k1_ > 0.0; }
    double K1() const { return k1_; }
    double M() const { return m_; }
    double Lq() const { return lq_; }
    const std::vector<double>& Ai() const { return ai_; }

    // Fill Ai, K1, M, Lq for a domain contained in B_R(0), R > 1.
    void derive_constants(double R);

    // Largest r with sum_i Ai r^{2i} <= gamma1: any point within r of a net
    // point is strictly inside its gamma1-cell.
    double cover_radius_for(double gamma1) const;

    struct BoundsDiag {
        double q_value;
        double norm_pow_2n;
        bool lower_checked;  // only when q(y) < 1
        bool lower_ok;       // ||y||^{2n} <= q(y)
        bool upper_ok;       // q(y) <= K1 max(||y||, ||y||^{2n})
    };
    BoundsDiag check_bounds(std::span<const double> y) const;

private:
    Kind kind_ = Kind::generic;
    int dim_ = 0;
    unsigned n_half_ = 0;
    double scale_ = 1.0;
    double eta_ = 0.0;
    std::vector<PComponent> p_;
    std::vector<double> ai_;
    double k1_ = 0.0, m_ = 0.0, lq_ = 0.0;
    double R_ = 0.0;
};

}  // namespace gapx
