#include "dcdc/pencil.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "dcdc/errors.hpp"

namespace dcdc {

PolyMatrixPencil PolyMatrixPencil::zero(int n, int k) {
    PolyMatrixPencil p;
    p.size = n;
    p.order = k;
    p.coeffs.assign(static_cast<std::size_t>(k) + 1, Eigen::MatrixXd::Zero(n, n));
    return p;
}

void PolyMatrixPencil::validate() const {
    if (size < 1) throw std::invalid_argument("pencil size must be >= 1");
    if (order < 0) throw std::invalid_argument("pencil order must be >= 0");
    if (static_cast<int>(coeffs.size()) != order + 1)
        throw std::invalid_argument("pencil needs exactly order+1 coefficient matrices");
    for (const auto& a : coeffs)
        if (a.rows() != size || a.cols() != size)
            throw std::invalid_argument("pencil coefficient matrix has wrong shape");
}

void MatrixPolynomial::trim() {
    while (coeffs.size() > 1 && coeffs.back().cwiseAbs().maxCoeff() == 0.0)
        coeffs.pop_back();
}

namespace {

// Determinant of a matrix of polynomials by recursive cofactor expansion
// along the first column. Entries are indexed into `m` through `rows`/`cols`
// to avoid copying minors.
Poly poly_det(const std::vector<Poly>& m, int n, std::vector<int>& rows,
              std::vector<int>& cols) {
    const std::size_t sz = rows.size();
    if (sz == 1) return m[static_cast<std::size_t>(rows[0] * n + cols[0])];
    Poly acc;
    const int col = cols[0];
    std::vector<int> sub_cols(cols.begin() + 1, cols.end());
    for (std::size_t i = 0; i < sz; ++i) {
        const Poly& entry = m[static_cast<std::size_t>(rows[i] * n + col)];
        if (entry.is_zero()) continue;
        std::vector<int> sub_rows;
        sub_rows.reserve(sz - 1);
        for (std::size_t r = 0; r < sz; ++r)
            if (r != i) sub_rows.push_back(rows[r]);
        Poly minor = poly_det(m, n, sub_rows, sub_cols);
        if (i % 2 == 1) minor = -minor;
        acc += entry * minor;
    }
    return acc;
}

} // namespace

Poly det_polynomial(const PolyMatrixPencil& p, double rel_tol) {
    p.validate();
    const int n = p.size;
    std::vector<Poly> entries(static_cast<std::size_t>(n) * n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            std::vector<double> coef(static_cast<std::size_t>(p.order) + 1);
            for (int i = 0; i <= p.order; ++i) coef[static_cast<std::size_t>(i)] = p.coeffs[static_cast<std::size_t>(i)](r, c);
            entries[static_cast<std::size_t>(r * n + c)] = Poly(std::move(coef));
        }
    std::vector<int> rows(static_cast<std::size_t>(n)), cols(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = cols[static_cast<std::size_t>(i)] = i;
    Poly det = poly_det(entries, n, rows, cols);
    return det.truncated(rel_tol);
}

int rank_of(const Eigen::MatrixXd& m, double rel_tol) {
    if (rel_tol <= 0.0) throw std::invalid_argument("rank tolerance must be > 0");
    return row_compression(m, rel_tol).second;
}

std::pair<Eigen::MatrixXd, int> row_compression(const Eigen::MatrixXd& a,
                                                double rel_tol) {
    const int n = static_cast<int>(a.rows());
    const int cols = static_cast<int>(a.cols());
    Eigen::MatrixXd m = a;
    Eigen::MatrixXd p = Eigen::MatrixXd::Identity(n, n);
    const double scale = a.cwiseAbs().maxCoeff();
    if (scale == 0.0) return {p, 0};
    const double thresh = rel_tol * scale;

    int rank = 0;
    while (rank < n) {
        // Largest remaining entry over the untouched rows, any column.
        int pr = -1, pc = -1;
        double best = thresh;
        for (int r = rank; r < n; ++r)
            for (int c = 0; c < cols; ++c)
                if (std::abs(m(r, c)) > best) {
                    best = std::abs(m(r, c));
                    pr = r;
                    pc = c;
                }
        if (pr < 0) break;
        if (pr != rank) {
            m.row(pr).swap(m.row(rank));
            p.row(pr).swap(p.row(rank));
        }
        for (int r = rank + 1; r < n; ++r) {
            const double factor = m(r, pc) / m(rank, pc);
            if (factor != 0.0) {
                m.row(r) -= factor * m.row(rank);
                p.row(r) -= factor * p.row(rank);
            }
        }
        ++rank;
    }
    if (!p.allFinite()) throw SingularP("row compression produced a non-finite P");
    return {p, rank};
}

PencilReport analyze(const PolyMatrixPencil& p, double rank_tol) {
    p.validate();
    PencilReport rep;
    const int n = p.size;
    const int k = p.order;
    rep.leading_rank = rank_of(p.leading(), rank_tol);

    const Poly det = det_polynomial(p);
    if (det.is_zero()) {
        rep.finite_dim = false;
        return rep;
    }
    rep.finite_dim = true;
    const int d = det.degree();
    rep.det_degree = d;
    rep.dj_sequence.emplace_back(0, d);

    if (rep.leading_rank == n) {
        rep.index_l = 0;
        return rep;
    }
    // Index estimate, j = 0: l = (n(j+k) - d_j) / (n - r), rounded up when
    // not a multiple.
    const int num = n * k - d;
    const int den = n - rep.leading_rank;
    rep.index_l = (num % den == 0) ? num / den : num / den + 1;
    return rep;
}

MatrixPolynomial adjugate(const PolyMatrixPencil& p) {
    p.validate();
    const int n = p.size;
    MatrixPolynomial adj;
    adj.size = n;

    if (n == 1) {
        adj.coeffs = {Eigen::MatrixXd::Ones(1, 1)};
        return adj;
    }

    std::vector<Poly> entries(static_cast<std::size_t>(n) * n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            std::vector<double> coef(static_cast<std::size_t>(p.order) + 1);
            for (int i = 0; i <= p.order; ++i) coef[static_cast<std::size_t>(i)] = p.coeffs[static_cast<std::size_t>(i)](r, c);
            entries[static_cast<std::size_t>(r * n + c)] = Poly(std::move(coef));
        }

    // adj[c][r] = (-1)^{r+c} det(minor rc): cofactor transpose.
    std::vector<Poly> adj_entries(static_cast<std::size_t>(n) * n);
    int max_deg = 0;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            std::vector<int> rows, cols;
            for (int i = 0; i < n; ++i) {
                if (i != r) rows.push_back(i);
                if (i != c) cols.push_back(i);
            }
            Poly cof = poly_det(entries, n, rows, cols);
            if ((r + c) % 2 == 1) cof = -cof;
            adj_entries[static_cast<std::size_t>(c * n + r)] = cof;
            max_deg = std::max(max_deg, cof.degree());
        }

    adj.coeffs.assign(static_cast<std::size_t>(std::max(max_deg, 0)) + 1,
                      Eigen::MatrixXd::Zero(n, n));
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const Poly& q = adj_entries[static_cast<std::size_t>(r * n + c)];
            for (int g = 0; g <= q.degree(); ++g) adj.coeffs[static_cast<std::size_t>(g)](r, c) = q.coeff(g);
        }
    adj.trim();
    return adj;
}

std::vector<Poly> apply_pencil(const PolyMatrixPencil& p,
                               const std::vector<Poly>& x) {
    const int n = p.size;
    std::vector<Poly> out(static_cast<std::size_t>(n));
    for (int i = 0; i <= p.order; ++i) {
        std::vector<Poly> xi(static_cast<std::size_t>(n));
        for (int c = 0; c < n; ++c) xi[static_cast<std::size_t>(c)] = x[static_cast<std::size_t>(c)].derivative(i);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) {
                const double a = p.coeffs[static_cast<std::size_t>(i)](r, c);
                if (a != 0.0) out[static_cast<std::size_t>(r)] += a * xi[static_cast<std::size_t>(c)];
            }
    }
    return out;
}

std::vector<Poly> adjugate_solve(const PolyMatrixPencil& p,
                                 const std::vector<Poly>& f) {
    p.validate();
    const int n = p.size;
    if (static_cast<int>(f.size()) != n)
        throw std::invalid_argument("right-hand side has wrong length");

    const Poly det = det_polynomial(p);
    if (det.is_zero() || det.degree() > 0)
        throw NotConstantDeterminant("det of the pencil is not a nonzero constant");
    const double a0 = det.coeff(0);

    const MatrixPolynomial adj = adjugate(p);
    std::vector<Poly> x(static_cast<std::size_t>(n));
    for (int g = 0; g <= adj.degree(); ++g) {
        std::vector<Poly> fg(static_cast<std::size_t>(n));
        for (int c = 0; c < n; ++c) fg[static_cast<std::size_t>(c)] = f[static_cast<std::size_t>(c)].derivative(g);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) {
                const double a = adj.coeffs[static_cast<std::size_t>(g)](r, c);
                if (a != 0.0) x[static_cast<std::size_t>(r)] += (a / a0) * fg[static_cast<std::size_t>(c)];
            }
    }

    // Built-in residual check: Σ A_i x^(i) must reproduce f.
    const std::vector<Poly> back = apply_pencil(p, x);
    double scale = 0.0;
    for (const Poly& q : f) scale = std::max(scale, q.max_abs_coeff());
    if (scale == 0.0) scale = 1.0;
    for (int r = 0; r < n; ++r)
        if (!approx_equal(back[static_cast<std::size_t>(r)], f[static_cast<std::size_t>(r)], 1e-10, scale))
            throw std::runtime_error("adjugate solve failed the residual check");
    return x;
}

PolyMatrixPencil read_pencil(std::istream& in) {
    PolyMatrixPencil p;
    int n = 0, k = -1;
    if (!(in >> n >> k)) throw std::runtime_error("pencil file: expected 'n k' header");
    if (n < 1 || k < 0) throw std::runtime_error("pencil file: invalid n or k");
    p.size = n;
    p.order = k;
    p.coeffs.assign(static_cast<std::size_t>(k) + 1, Eigen::MatrixXd::Zero(n, n));
    for (int i = 0; i <= k; ++i)
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                if (!(in >> p.coeffs[static_cast<std::size_t>(i)](r, c)))
                    throw std::runtime_error("pencil file: truncated coefficient block");
    return p;
}

void write_pencil(std::ostream& out, const PolyMatrixPencil& p) {
    out << p.size << " " << p.order << "\n";
    for (int i = 0; i <= p.order; ++i) {
        for (int r = 0; r < p.size; ++r) {
            for (int c = 0; c < p.size; ++c) {
                if (c) out << " ";
                out << p.coeffs[static_cast<std::size_t>(i)](r, c);
            }
            out << "\n";
        }
    }
}

std::string format_report(const PencilReport& rep) {
    std::ostringstream os;
    os << "finite_dim = " << (rep.finite_dim ? "true" : "false") << "\n";
    os << "det_degree = ";
    if (rep.det_degree) os << *rep.det_degree;
    else os << "INFINITE_DIM";
    os << "\n";
    os << "leading_rank = " << rep.leading_rank << "\n";
    os << "index_l = ";
    if (rep.index_l) os << *rep.index_l;
    else os << "n/a";
    os << "\n";
    os << "dj_sequence =";
    for (const auto& [j, dj] : rep.dj_sequence) os << " (" << j << "," << dj << ")";
    os << "\n";
    return os.str();
}

} // namespace dcdc
