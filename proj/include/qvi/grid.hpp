#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace qvi {

class ShapeMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Uniform node grid on an interval (dim 1) or rectangle (dim 2).
///
/// Nodes are numbered x-fastest: node(i, j) = j * nx + i. Faces of axis a join
/// node p and node p + e_a; axis-0 faces are numbered j * (nx - 1) + i and
/// axis-1 faces j * nx + i.
struct Grid {
    int dim = 1;
    std::array<double, 2> lo{-1.0, 0.0};
    std::array<double, 2> hi{1.0, 0.0};
    std::array<int, 2> n{81, 1};

    static Grid line(double a, double b, int nx);
    static Grid rectangle(double ax, double bx, double ay, double by, int nx, int ny);

    double h(int axis) const { return (hi[axis] - lo[axis]) / (n[axis] - 1); }
    double min_h() const;

    std::size_t node_count() const { return static_cast<std::size_t>(n[0]) * static_cast<std::size_t>(dim == 2 ? n[1] : 1); }
    std::size_t face_count(int axis) const;
    std::size_t face_count() const { return face_count(0) + (dim == 2 ? face_count(1) : 0); }

    std::size_t node(int i, int j = 0) const { return static_cast<std::size_t>(j) * n[0] + i; }
    int ix(std::size_t node) const { return static_cast<int>(node % n[0]); }
    int iy(std::size_t node) const { return static_cast<int>(node / n[0]); }

    double x(int i) const { return lo[0] + i * h(0); }
    double y(int j) const { return lo[1] + j * h(1); }

    bool on_boundary(std::size_t node) const;

    /// Trapezoidal cell volume of a node (half/quarter at the boundary).
    double node_weight(std::size_t node) const;
    /// Cell volume attached to a face: h_a times the transverse trapezoid width.
    double face_weight(int axis, std::size_t face) const;

    /// Nodes joined by a face: (lower, upper) along the axis.
    std::pair<std::size_t, std::size_t> face_nodes(int axis, std::size_t face) const;
    /// Face midpoint coordinates.
    std::array<double, 2> face_midpoint(int axis, std::size_t face) const;

    double measure() const;

    bool operator==(const Grid& other) const = default;
};

/// Node-centered scalar values.
struct ScalarField {
    Grid grid;
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(const Grid& g, double fill = 0.0) : grid(g), values(g.node_count(), fill) {}

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }
};

/// Per-face values stored per axis family. Holds face-centered vector
/// components (the axis-a entry is the a-th component on axis-a faces) and is
/// reused for per-face scalars such as magnitudes, thresholds, and multipliers.
struct FaceField {
    Grid grid;
    std::array<std::vector<double>, 2> comp;

    FaceField() = default;
    explicit FaceField(const Grid& g, double fill = 0.0);

    std::vector<double>& operator[](int axis) { return comp[axis]; }
    const std::vector<double>& operator[](int axis) const { return comp[axis]; }
    int axes() const { return grid.dim; }
};

using FaceVectorField = FaceField;

/// Fills a field with f(x, y) at each node.
ScalarField sample(const Grid& g, const std::function<double(double, double)>& f);

void pin_boundary(ScalarField& u);

FaceVectorField gradient(const ScalarField& u);
ScalarField divergence(const FaceVectorField& q);

/// Per-face gradient magnitude. In 2D the transverse component on a face is
/// the mean of the (up to four) neighbouring transverse face differences.
FaceField face_gradient_magnitude(const ScalarField& u);

/// Mean of the adjacent node values at each face.
FaceField face_average(const ScalarField& u);

/// Mean over the faces touching each node.
ScalarField node_average(const FaceField& q);

double inner_product(const ScalarField& u, const ScalarField& v);
double face_inner_product(const FaceField& p, const FaceField& q);
/// Volume-weighted face sum of q.
double face_integral(const FaceField& q);

double max_abs(const ScalarField& u);
double l1_norm(const ScalarField& u);

void check_same_grid(const Grid& a, const Grid& b, const char* where);

}  // namespace qvi
