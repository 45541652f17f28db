#include "pflow/manifold.hpp"

#include <cmath>

#include "pflow/error.hpp"

namespace pflow {

double Manifold::norm(const Vector& point, const Vector& v) const { return std::sqrt(inner(point, v, v)); }

Vector Manifold::random_tangent(const Vector& point, std::mt19937_64& rng) const {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector v(ambient_size());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = gauss(rng);
    Vector t = project_tangent(point, v);
    const double n = norm(point, t);
    return n > 0.0 ? Vector(t / n) : t;
}

Vector EuclideanManifold::project_tangent(const Vector&, const Vector& ambient) const { return ambient; }

Vector EuclideanManifold::retract(const Vector& point, const Vector& tangent) const { return point + tangent; }

double EuclideanManifold::inner(const Vector&, const Vector& u, const Vector& v) const { return u.dot(v); }

bool EuclideanManifold::contains(const Vector& point, double) const {
    return static_cast<std::size_t>(point.size()) == n_ && point.allFinite();
}

Vector ComplexCircleManifold::project_tangent(const Vector& point, const Vector& ambient) const {
    // Remove the radial component Re(conj(z_i) v_i) z_i.
    Vector out = ambient;
    for (std::size_t i = 0; i < n_; ++i) {
        const double zr = point[2 * i], zi = point[2 * i + 1];
        const double radial = zr * ambient[2 * i] + zi * ambient[2 * i + 1];
        out[2 * i] -= radial * zr;
        out[2 * i + 1] -= radial * zi;
    }
    return out;
}

Vector ComplexCircleManifold::retract(const Vector& point, const Vector& tangent) const {
    auto z = unpack_complex(point + tangent);
    return pack_complex(retract_ccm(z));
}

double ComplexCircleManifold::inner(const Vector&, const Vector& u, const Vector& v) const { return u.dot(v); }

bool ComplexCircleManifold::contains(const Vector& point, double tol) const {
    if (static_cast<std::size_t>(point.size()) != 2 * n_) return false;
    for (std::size_t i = 0; i < n_; ++i) {
        if (std::abs(std::hypot(point[2 * i], point[2 * i + 1]) - 1.0) > tol) return false;
    }
    return true;
}

std::vector<std::complex<double>> retract_ccm(std::span<const std::complex<double>> z) {
    std::vector<std::complex<double>> out;
    out.reserve(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double m = std::abs(z[i]);
        if (m == 0.0) throw InputError("zero entry at position " + std::to_string(i) + " (direction undefined)");
        if (!std::isfinite(m)) throw NumericalError("non-finite entry at position " + std::to_string(i));
        out.push_back(z[i] / m);
    }
    return out;
}

Vector pack_complex(std::span<const std::complex<double>> z) {
    Vector v(2 * static_cast<Eigen::Index>(z.size()));
    for (std::size_t i = 0; i < z.size(); ++i) {
        v[2 * i] = z[i].real();
        v[2 * i + 1] = z[i].imag();
    }
    return v;
}

std::vector<std::complex<double>> unpack_complex(const Vector& v) {
    std::vector<std::complex<double>> z(static_cast<std::size_t>(v.size() / 2));
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = {v[2 * i], v[2 * i + 1]};
    return z;
}

}  // namespace pflow
