#include "qvi/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qvi {

Grid Grid::line(double a, double b, int nx)
{
    if (!(b > a)) throw std::invalid_argument("Grid: empty interval");
    if (nx < 3) throw std::invalid_argument("Grid: need at least 3 nodes per axis");
    Grid g;
    g.dim = 1;
    g.lo = {a, 0.0};
    g.hi = {b, 0.0};
    g.n = {nx, 1};
    return g;
}

Grid Grid::rectangle(double ax, double bx, double ay, double by, int nx, int ny)
{
    if (!(bx > ax) || !(by > ay)) throw std::invalid_argument("Grid: empty rectangle");
    if (nx < 3 || ny < 3) throw std::invalid_argument("Grid: need at least 3 nodes per axis");
    Grid g;
    g.dim = 2;
    g.lo = {ax, ay};
    g.hi = {bx, by};
    g.n = {nx, ny};
    return g;
}

double Grid::min_h() const
{
    return dim == 2 ? std::min(h(0), h(1)) : h(0);
}

std::size_t Grid::face_count(int axis) const
{
    if (dim == 1) {
        return axis == 0 ? static_cast<std::size_t>(n[0] - 1) : 0;
    }
    return axis == 0 ? static_cast<std::size_t>(n[0] - 1) * n[1]
                     : static_cast<std::size_t>(n[0]) * (n[1] - 1);
}

bool Grid::on_boundary(std::size_t p) const
{
    const int i = ix(p);
    if (i == 0 || i == n[0] - 1) return true;
    if (dim == 2) {
        const int j = iy(p);
        return j == 0 || j == n[1] - 1;
    }
    return false;
}

double Grid::node_weight(std::size_t p) const
{
    const int i = ix(p);
    double w = h(0) * ((i == 0 || i == n[0] - 1) ? 0.5 : 1.0);
    if (dim == 2) {
        const int j = iy(p);
        w *= h(1) * ((j == 0 || j == n[1] - 1) ? 0.5 : 1.0);
    }
    return w;
}

double Grid::face_weight(int axis, std::size_t face) const
{
    if (dim == 1) return h(0);
    if (axis == 0) {
        const int j = static_cast<int>(face / (n[0] - 1));
        return h(0) * h(1) * ((j == 0 || j == n[1] - 1) ? 0.5 : 1.0);
    }
    const int i = static_cast<int>(face % n[0]);
    return h(0) * h(1) * ((i == 0 || i == n[0] - 1) ? 0.5 : 1.0);
}

std::pair<std::size_t, std::size_t> Grid::face_nodes(int axis, std::size_t face) const
{
    if (axis == 0) {
        const std::size_t stride = n[0] - 1;
        const std::size_t j = face / stride;
        const std::size_t i = face % stride;
        const std::size_t p = j * n[0] + i;
        return {p, p + 1};
    }
    return {face, face + n[0]};
}

std::array<double, 2> Grid::face_midpoint(int axis, std::size_t face) const
{
    const auto [a, b] = face_nodes(axis, face);
    const double xm = 0.5 * (x(ix(a)) + x(ix(b)));
    const double ym = dim == 2 ? 0.5 * (y(iy(a)) + y(iy(b))) : 0.0;
    return {xm, ym};
}

double Grid::measure() const
{
    double m = hi[0] - lo[0];
    if (dim == 2) m *= hi[1] - lo[1];
    return m;
}

FaceField::FaceField(const Grid& g, double fill) : grid(g)
{
    comp[0].assign(g.face_count(0), fill);
    if (g.dim == 2) comp[1].assign(g.face_count(1), fill);
}

void check_same_grid(const Grid& a, const Grid& b, const char* where)
{
    if (!(a == b)) {
        throw ShapeMismatch(std::string(where) + ": grid mismatch");
    }
}

namespace {

void check_conforms(const ScalarField& u, const char* where)
{
    if (u.values.size() != u.grid.node_count()) {
        throw ShapeMismatch(std::string(where) + ": field size does not match grid");
    }
}

void check_conforms(const FaceField& q, const char* where)
{
    for (int a = 0; a < 2; ++a) {
        const std::size_t expected = a < q.grid.dim ? q.grid.face_count(a) : 0;
        if (q.comp[a].size() != expected) {
            throw ShapeMismatch(std::string(where) + ": face array size does not match grid");
        }
    }
}

}  // namespace

ScalarField sample(const Grid& g, const std::function<double(double, double)>& f)
{
    ScalarField u(g);
    for (std::size_t p = 0; p < g.node_count(); ++p) {
        u[p] = f(g.x(g.ix(p)), g.dim == 2 ? g.y(g.iy(p)) : 0.0);
    }
    return u;
}

void pin_boundary(ScalarField& u)
{
    for (std::size_t p = 0; p < u.size(); ++p) {
        if (u.grid.on_boundary(p)) u[p] = 0.0;
    }
}

FaceVectorField gradient(const ScalarField& u)
{
    check_conforms(u, "gradient");
    const Grid& g = u.grid;
    FaceVectorField q(g);
    for (int a = 0; a < g.dim; ++a) {
        const double inv_h = 1.0 / g.h(a);
        for (std::size_t f = 0; f < q[a].size(); ++f) {
            const auto [lo, hi] = g.face_nodes(a, f);
            q[a][f] = (u[hi] - u[lo]) * inv_h;
        }
    }
    return q;
}

ScalarField divergence(const FaceVectorField& q)
{
    check_conforms(q, "divergence");
    const Grid& g = q.grid;
    ScalarField d(g);
    const int nx = g.n[0];
    const double inv_hx = 1.0 / g.h(0);
    if (g.dim == 1) {
        for (int i = 1; i < nx - 1; ++i) {
            d[i] = (q[0][i] - q[0][i - 1]) * inv_hx;
        }
        return d;
    }
    const int ny = g.n[1];
    const double inv_hy = 1.0 / g.h(1);
    for (int j = 1; j < ny - 1; ++j) {
        for (int i = 1; i < nx - 1; ++i) {
            const std::size_t fx = static_cast<std::size_t>(j) * (nx - 1) + i;
            const std::size_t fy = static_cast<std::size_t>(j) * nx + i;
            d[g.node(i, j)] = (q[0][fx] - q[0][fx - 1]) * inv_hx + (q[1][fy] - q[1][fy - nx]) * inv_hy;
        }
    }
    return d;
}

FaceField face_gradient_magnitude(const ScalarField& u)
{
    const FaceVectorField grad = gradient(u);
    const Grid& g = u.grid;
    FaceField m(g);
    if (g.dim == 1) {
        for (std::size_t f = 0; f < m[0].size(); ++f) m[0][f] = std::fabs(grad[0][f]);
        return m;
    }
    const int nx = g.n[0];
    const int ny = g.n[1];
    // axis-0 faces: transverse = mean of y-differences at the two end nodes
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx - 1; ++i) {
            double sum = 0.0;
            int count = 0;
            for (int di = 0; di <= 1; ++di) {
                if (j > 0) { sum += grad[1][static_cast<std::size_t>(j - 1) * nx + i + di]; ++count; }
                if (j < ny - 1) { sum += grad[1][static_cast<std::size_t>(j) * nx + i + di]; ++count; }
            }
            const double gt = sum / count;
            const std::size_t f = static_cast<std::size_t>(j) * (nx - 1) + i;
            m[0][f] = std::hypot(grad[0][f], gt);
        }
    }
    for (int j = 0; j < ny - 1; ++j) {
        for (int i = 0; i < nx; ++i) {
            double sum = 0.0;
            int count = 0;
            for (int dj = 0; dj <= 1; ++dj) {
                if (i > 0) { sum += grad[0][static_cast<std::size_t>(j + dj) * (nx - 1) + i - 1]; ++count; }
                if (i < nx - 1) { sum += grad[0][static_cast<std::size_t>(j + dj) * (nx - 1) + i]; ++count; }
            }
            const double gt = sum / count;
            const std::size_t f = static_cast<std::size_t>(j) * nx + i;
            m[1][f] = std::hypot(grad[1][f], gt);
        }
    }
    return m;
}

FaceField face_average(const ScalarField& u)
{
    check_conforms(u, "face_average");
    FaceField q(u.grid);
    for (int a = 0; a < u.grid.dim; ++a) {
        for (std::size_t f = 0; f < q[a].size(); ++f) {
            const auto [lo, hi] = u.grid.face_nodes(a, f);
            q[a][f] = 0.5 * (u[lo] + u[hi]);
        }
    }
    return q;
}

ScalarField node_average(const FaceField& q)
{
    check_conforms(q, "node_average");
    const Grid& g = q.grid;
    ScalarField sum(g);
    std::vector<int> count(g.node_count(), 0);
    for (int a = 0; a < g.dim; ++a) {
        for (std::size_t f = 0; f < q[a].size(); ++f) {
            const auto [lo, hi] = g.face_nodes(a, f);
            sum[lo] += q[a][f];
            sum[hi] += q[a][f];
            ++count[lo];
            ++count[hi];
        }
    }
    for (std::size_t p = 0; p < sum.size(); ++p) {
        if (count[p] > 0) sum[p] /= count[p];
    }
    return sum;
}

double inner_product(const ScalarField& u, const ScalarField& v)
{
    check_conforms(u, "inner_product");
    check_conforms(v, "inner_product");
    check_same_grid(u.grid, v.grid, "inner_product");
    double s = 0.0;
    for (std::size_t p = 0; p < u.size(); ++p) {
        s += u.grid.node_weight(p) * u[p] * v[p];
    }
    return s;
}

double face_inner_product(const FaceField& p, const FaceField& q)
{
    check_conforms(p, "face_inner_product");
    check_conforms(q, "face_inner_product");
    check_same_grid(p.grid, q.grid, "face_inner_product");
    double s = 0.0;
    for (int a = 0; a < p.grid.dim; ++a) {
        for (std::size_t f = 0; f < p[a].size(); ++f) {
            s += p.grid.face_weight(a, f) * p[a][f] * q[a][f];
        }
    }
    return s;
}

double face_integral(const FaceField& q)
{
    check_conforms(q, "face_integral");
    double s = 0.0;
    for (int a = 0; a < q.grid.dim; ++a) {
        for (std::size_t f = 0; f < q[a].size(); ++f) {
            s += q.grid.face_weight(a, f) * q[a][f];
        }
    }
    // axis families each tile the domain once; report the mean over families
    return s / q.grid.dim;
}

double max_abs(const ScalarField& u)
{
    double m = 0.0;
    for (double v : u.values) m = std::max(m, std::fabs(v));
    return m;
}

double l1_norm(const ScalarField& u)
{
    double s = 0.0;
    for (std::size_t p = 0; p < u.size(); ++p) s += u.grid.node_weight(p) * std::fabs(u[p]);
    return s;
}

}  // namespace qvi
