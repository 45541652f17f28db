#pragma once

#include <complex>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace pflow {

using Vector = Eigen::VectorXd;

/// Riemannian manifold embedded in R^N. Points and tangent vectors are stored
/// as real vectors of length `ambient_size()`.
class Manifold {
  public:
    virtual ~Manifold() = default;

    /// Intrinsic dimension.
    virtual std::size_t dim() const = 0;
    virtual std::size_t ambient_size() const = 0;

    virtual Vector project_tangent(const Vector& point, const Vector& ambient) const = 0;
    virtual Vector retract(const Vector& point, const Vector& tangent) const = 0;
    virtual double inner(const Vector& point, const Vector& u, const Vector& v) const = 0;
    virtual bool contains(const Vector& point, double tol) const = 0;

    double norm(const Vector& point, const Vector& v) const;

    /// Unit-norm tangent vector at `point` with a Gaussian direction.
    Vector random_tangent(const Vector& point, std::mt19937_64& rng) const;
};

/// R^n with the dot product; retraction is vector addition.
class EuclideanManifold final : public Manifold {
  public:
    explicit EuclideanManifold(std::size_t n) : n_(n) {}

    std::size_t dim() const override { return n_; }
    std::size_t ambient_size() const override { return n_; }
    Vector project_tangent(const Vector& point, const Vector& ambient) const override;
    Vector retract(const Vector& point, const Vector& tangent) const override;
    double inner(const Vector& point, const Vector& u, const Vector& v) const override;
    bool contains(const Vector& point, double tol) const override;

  private:
    std::size_t n_;
};

/// Product of n unit circles in C, {z in C^n : |z_i| = 1}. Stored interleaved
/// as [Re z_0, Im z_0, Re z_1, Im z_1, ...]; the metric is Re<u, v>.
class ComplexCircleManifold final : public Manifold {
  public:
    explicit ComplexCircleManifold(std::size_t n) : n_(n) {}

    std::size_t dim() const override { return n_; }
    std::size_t ambient_size() const override { return 2 * n_; }
    Vector project_tangent(const Vector& point, const Vector& ambient) const override;
    /// Entry-wise normalization of point + tangent.
    Vector retract(const Vector& point, const Vector& tangent) const override;
    double inner(const Vector& point, const Vector& u, const Vector& v) const override;
    bool contains(const Vector& point, double tol) const override;

  private:
    std::size_t n_;
};

/// z_i / |z_i| for every entry. Throws InputError on a zero entry.
std::vector<std::complex<double>> retract_ccm(std::span<const std::complex<double>> z);

Vector pack_complex(std::span<const std::complex<double>> z);
std::vector<std::complex<double>> unpack_complex(const Vector& v);

}  // namespace pflow
