#pragma once

#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace sgpe {

using cplx = std::complex<double>;

inline constexpr double kInfNorm = std::numeric_limits<double>::infinity();

/// 2D Hermite mode index k = (k1, k2).
struct MultiIndex
{
	int k1 = 0;
	int k2 = 0;

	constexpr int degree() const { return k1 + k2; }
	/// lambda_k^2 = 2|k| + 2, eigenvalue of -H = -Delta + |x|^2
	constexpr double eigenvalue_sq() const { return 2.0 * degree() + 2.0; }
	double eigenvalue() const;

	friend constexpr bool operator==(MultiIndex, MultiIndex) = default;
};

/// number of modes with |k| <= deg
constexpr std::size_t mode_count(int deg)
{
	return deg < 0 ? 0 : static_cast<std::size_t>(deg + 1) * static_cast<std::size_t>(deg + 2) / 2;
}

/// triangular layout: all modes of degree d are contiguous, ordered by k2
constexpr std::size_t mode_index(MultiIndex k)
{
	return mode_count(k.degree() - 1) + static_cast<std::size_t>(k.k2);
}

MultiIndex mode_at(std::size_t index);

inline double lambda_sq(int degree) { return 2.0 * degree + 2.0; }

/// Gauss-Hermite rule for the weight exp(-x^2): nodes ascending, weights positive.
struct QuadratureRule
{
	std::vector<double> nodes;
	std::vector<double> weights;
};

QuadratureRule gauss_hermite_rule(int m);

/// Normalized Hermite function (2^n n! sqrt(pi))^{-1/2} H_n(x) exp(-x^2/2).
double hermite_function(int n, double x);
std::vector<double> hermite_eval_1d(int n, std::span<const double> xs);
/// second derivative of the normalized Hermite function, via the ladder identity
std::vector<double> hermite_second_derivative_1d(int n, std::span<const double> xs);

enum class GridWeight
{
	gauss,  ///< plain Gauss-Hermite rule, exact for quadratic-in-basis integrands
	gauss2, ///< rule rescaled by 1/sqrt(2): exact for quartic-in-basis integrands
};

/**
 * Tabulated 1D Hermite functions on a tensor Gauss-Hermite grid.
 *
 * Line weights W_j satisfy  integral g(x) dx ~ sum_j W_j g(x_j)  on the whole
 * line; they are the rule weights times exp(x_j^2) (times the rescaling for
 * the gauss2 grid) and are computed without forming that product.
 * Immutable after construction.
 */
class BasisTable
{
  public:
	/// nodes == 0 picks 2*deg_max+1 (gauss) or 4*deg_max+1 (gauss2)
	explicit BasisTable(int deg_max, GridWeight weight = GridWeight::gauss, int nodes = 0);

	int deg_max() const { return deg_max_; }
	int nodes() const { return m_; }
	std::size_t grid_size() const { return static_cast<std::size_t>(m_) * m_; }
	GridWeight weight_kind() const { return weight_; }

	/// physical node positions x_j
	std::span<const double> nodes_1d() const { return x_; }
	/// rule weights for the exp(-y^2) weight at the unscaled nodes y_j
	std::span<const double> weights_1d() const { return w_; }
	std::span<const double> line_weights() const { return lw_; }

	/// h_n(x_j) for j = 0..M-1
	std::span<const double> hrow(int n) const
	{
		return {hvals_.data() + static_cast<std::size_t>(n) * m_, static_cast<std::size_t>(m_)};
	}
	double h(int n, int j) const { return hvals_[static_cast<std::size_t>(n) * m_ + j]; }

	/// W_j h_n(x_j), the analysis rows
	std::span<const double> whrow(int n) const
	{
		return {whvals_.data() + static_cast<std::size_t>(n) * m_, static_cast<std::size_t>(m_)};
	}

	/// h_k(x_i, x_j) for a 2D mode
	double h2(MultiIndex k, int i, int j) const { return h(k.k1, i) * h(k.k2, j); }

	double cell_weight(int i, int j) const { return lw_[i] * lw_[j]; }

	/// integral over R^2 of a real grid function
	double integrate(std::span<const double> grid) const;

  private:
	int deg_max_;
	int m_;
	GridWeight weight_;
	std::vector<double> x_, w_, lw_;
	std::vector<double> hvals_, whvals_;
};

/// Complex coefficients on span{h_k : |k| <= deg_max}, triangular layout.
class SpectralField
{
  public:
	SpectralField() = default;
	explicit SpectralField(int deg_max) : deg_(deg_max), c_(mode_count(deg_max)) {}

	static SpectralField basis_vector(int deg_max, MultiIndex k, cplx value = 1.0);

	int deg_max() const { return deg_; }
	std::size_t size() const { return c_.size(); }

	cplx& operator[](std::size_t i) { return c_[i]; }
	cplx operator[](std::size_t i) const { return c_[i]; }
	cplx& at(MultiIndex k) { return c_[mode_index(k)]; }
	cplx at(MultiIndex k) const { return c_[mode_index(k)]; }

	std::span<cplx> coeffs() { return c_; }
	std::span<const cplx> coeffs() const { return c_; }

	/// sum |c_k|^2 (real inner product convention)
	double norm_sq() const;

	/// same field with coefficients truncated or zero-padded to deg
	SpectralField resized(int deg) const;

	SpectralField& operator+=(const SpectralField& o);
	SpectralField& operator-=(const SpectralField& o);
	SpectralField& operator*=(cplx a);

	friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
	friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
	friend SpectralField operator*(cplx s, SpectralField a) { return a *= s; }

  private:
	int deg_ = 0;
	std::vector<cplx> c_;
};

/// Complex values on the M x M tensor grid, row-major in (x1 index, x2 index).
struct GridField
{
	int m = 0;
	std::vector<cplx> values;

	GridField() = default;
	explicit GridField(int m_) : m(m_), values(static_cast<std::size_t>(m_) * m_) {}

	cplx& operator()(int i, int j) { return values[static_cast<std::size_t>(i) * m + j]; }
	cplx operator()(int i, int j) const { return values[static_cast<std::size_t>(i) * m + j]; }
};

/// Real values on the tensor grid, same layout as GridField.
struct RealGrid
{
	int m = 0;
	std::vector<double> values;

	RealGrid() = default;
	explicit RealGrid(int m_, double fill = 0.0) : m(m_), values(static_cast<std::size_t>(m_) * m_, fill) {}

	double& operator()(int i, int j) { return values[static_cast<std::size_t>(i) * m + j]; }
	double operator()(int i, int j) const { return values[static_cast<std::size_t>(i) * m + j]; }
};

GridField synthesize(const SpectralField& f, const BasisTable& bt);
SpectralField analyze(const GridField& g, const BasisTable& bt, int deg);
SpectralField analyze(const RealGrid& g, const BasisTable& bt, int deg);

/// L^p norm by grid quadrature; p = kInfNorm takes the max over nodes
double lp_norm(const GridField& g, double p, const BasisTable& bt);
double lp_norm(const RealGrid& g, double p, const BasisTable& bt);

/// c_k -> lambda_k^s c_k
SpectralField apply_H_power(SpectralField f, double s);

/// |(-H)^{s/2} f|_{L^p}
double sobolev_norm(const SpectralField& f, double s, double p, const BasisTable& bt);

} // namespace sgpe
