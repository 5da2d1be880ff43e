#include "blindsr/linalg.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace blindsr::linalg {

namespace {

bool all_finite(const Complex* data, Index size)
{
    for (Index i = 0; i < size; ++i) {
        if (!std::isfinite(data[i].real()) || !std::isfinite(data[i].imag())) {
            return false;
        }
    }
    return true;
}

}  // namespace

void require_finite(const CMatrix& m, const char* what)
{
    if (!all_finite(m.data(), m.size())) {
        throw DomainError(std::string(what) + ": non-finite entry");
    }
}

void require_finite(const CVector& v, const char* what)
{
    if (!all_finite(v.data(), v.size())) {
        throw DomainError(std::string(what) + ": non-finite entry");
    }
}

Complex inner(const CMatrix& a, const CMatrix& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError("inner: shape mismatch");
    }
    return (a.conjugate().cwiseProduct(b)).sum();
}

Complex inner(const CVector& a, const CVector& b)
{
    if (a.size() != b.size()) {
        throw DimensionError("inner: length mismatch");
    }
    return a.dot(b);  // Eigen conjugates the left operand
}

TruncatedSvd svd_truncated(const CMatrix& m, Index r)
{
    const Index kmax = std::min(m.rows(), m.cols());
    if (r < 1 || r > kmax) {
        throw DimensionError("svd_truncated: rank " + std::to_string(r) + " outside [1, " +
                             std::to_string(kmax) + "]");
    }
    require_finite(m, "svd_truncated");
    Eigen::BDCSVD<CMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) {
        throw ConvergenceError("svd_truncated: SVD did not converge");
    }
    TruncatedSvd out;
    out.U     = svd.matrixU().leftCols(r);
    out.sigma = svd.singularValues().head(r);
    out.V     = svd.matrixV().leftCols(r);
    return out;
}

RVector singular_values(const CMatrix& m)
{
    require_finite(m, "singular_values");
    Eigen::BDCSVD<CMatrix> svd(m);
    if (svd.info() != Eigen::Success) {
        throw ConvergenceError("singular_values: SVD did not converge");
    }
    return svd.singularValues();
}

CMatrix solve_gram(const CMatrix& gram, const CMatrix& rhs, const Tolerances& tol)
{
    if (gram.rows() != gram.cols() || gram.rows() != rhs.rows()) {
        throw DimensionError("solve_gram: G must be square with as many rows as B");
    }
    // The Gram matrices here are at most rank x rank, so an eigen check is cheap.
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(gram, Eigen::EigenvaluesOnly);
    const RVector& lambda = eig.eigenvalues();
    const double lmax     = lambda.size() ? lambda.maxCoeff() : 0.0;
    const double lmin     = lambda.size() ? lambda.minCoeff() : 0.0;
    if (!(lmax > 0.0) || lmin < tol.gram_floor * lmax) {
        throw SingularGramError("solve_gram: Gram matrix numerically singular (lambda_min=" +
                                std::to_string(lmin) + ", lambda_max=" + std::to_string(lmax) +
                                ")");
    }
    Eigen::LLT<CMatrix> llt(gram);
    if (llt.info() != Eigen::Success) {
        throw SingularGramError("solve_gram: Cholesky factorization failed");
    }
    return llt.solve(rhs);
}

CMatrix right_solve_gram(const CMatrix& x, const CMatrix& gram, const Tolerances& tol)
{
    // X G^{-1} = (G^{-1} X^H)^H for Hermitian G.
    return solve_gram(gram, x.adjoint(), tol).adjoint();
}

CVector lstsq(const CMatrix& a, const CVector& b, const Tolerances& tol)
{
    if (a.rows() != b.size()) {
        throw DimensionError("lstsq: A has " + std::to_string(a.rows()) + " rows, b has " +
                             std::to_string(b.size()) + " entries");
    }
    if (a.rows() < a.cols()) {
        throw DimensionError("lstsq: system is under-determined");
    }
    Eigen::ColPivHouseholderQR<CMatrix> qr(a);
    qr.setThreshold(tol.rank_rel);
    if (qr.rank() < a.cols()) {
        throw RankDeficientError("lstsq: numerical rank " + std::to_string(qr.rank()) + " < " +
                                 std::to_string(a.cols()) + " columns");
    }
    return qr.solve(b);
}

std::string format_double(double x)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view token, std::size_t line)
{
    double value = 0.0;
    const char* first = token.data();
    const char* last  = token.data() + token.size();
    if (!token.empty() && *first == '+') {
        ++first;
    }
    auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc() || res.ptr != last) {
        throw ParseError("invalid number '" + std::string(token) + "'", line);
    }
    return value;
}

void write_cmx(std::ostream& os, const CMatrix& m)
{
    os << "cmx " << m.rows() << ' ' << m.cols() << '\n';
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) {
                os << ' ';
            }
            os << format_double(m(i, j).real()) << ' ' << format_double(m(i, j).imag());
        }
        os << '\n';
    }
}

CMatrix read_cmx(std::istream& is)
{
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(is, line)) {
        throw ParseError("cmx: empty input", lineno);
    }
    std::istringstream header(line);
    std::string magic;
    long long rows = -1, cols = -1;
    std::string extra;
    if (!(header >> magic >> rows >> cols) || magic != "cmx" || rows < 0 || cols < 0 ||
        (header >> extra)) {
        throw ParseError("cmx: bad header '" + line + "'", lineno);
    }
    CMatrix m(rows, cols);
    for (long long i = 0; i < rows; ++i) {
        ++lineno;
        if (!std::getline(is, line)) {
            throw ParseError("cmx: expected " + std::to_string(rows) + " rows", lineno);
        }
        std::istringstream row(line);
        std::vector<std::string> tokens;
        for (std::string tok; row >> tok;) {
            tokens.push_back(std::move(tok));
        }
        if (static_cast<long long>(tokens.size()) != 2 * cols) {
            throw ParseError("cmx: expected " + std::to_string(2 * cols) + " values, got " +
                                 std::to_string(tokens.size()),
                             lineno);
        }
        for (long long j = 0; j < cols; ++j) {
            m(i, j) = Complex(parse_double(tokens[2 * j], lineno),
                              parse_double(tokens[2 * j + 1], lineno));
        }
    }
    if (!all_finite(m.data(), m.size())) {
        throw ParseError("cmx: non-finite entry");
    }
    return m;
}

void save_cmx(const std::filesystem::path& path, const CMatrix& m)
{
    std::ofstream os(path);
    if (!os) {
        throw IOError("cannot open " + path.string() + " for writing");
    }
    write_cmx(os, m);
    if (!os) {
        throw IOError("write failed: " + path.string());
    }
}

CMatrix load_cmx(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) {
        throw IOError("cannot open " + path.string());
    }
    try {
        return read_cmx(is);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

}  // namespace blindsr::linalg
