#pragma once
// Fundamental-group presentation parsing, the exact integer-matrix
// representation of the boundary-torus generators, relator verification,
// the exponent-equation solver, and spectral/splitting checks.

#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "blflow/errors.hpp"

namespace blflow {

// ---------------------------------------------------------------------------
// Exact integer matrices
// ---------------------------------------------------------------------------

// Dense square matrix over the integers. Products accumulate in 128-bit
// intermediates and every stored entry is range-checked, so overflow raises
// OverflowError instead of wrapping.
class IntMatrix {
public:
    explicit IntMatrix(int dim);
    static IntMatrix identity(int dim);

    int dim() const { return d_; }
    std::int64_t& operator()(int i, int j) { return a_[std::size_t(i) * d_ + j]; }
    std::int64_t operator()(int i, int j) const { return a_[std::size_t(i) * d_ + j]; }

    IntMatrix operator*(const IntMatrix& rhs) const;
    bool operator==(const IntMatrix& rhs) const = default;

    bool is_identity() const;
    bool is_symmetric() const;

    // Exact determinant (fraction-free Gaussian elimination).
    std::int64_t det() const;

    // Exact inverse; requires det = +-1 (throws NotInvertible otherwise).
    IntMatrix inverse() const;

    // Integer power, negative exponents via the exact inverse.
    IntMatrix pow(std::int64_t k) const;

    Eigen::MatrixXd to_real() const;
    std::string to_string() const;

private:
    int d_;
    std::vector<std::int64_t> a_;
};

// ---------------------------------------------------------------------------
// Words and presentations
// ---------------------------------------------------------------------------

struct Letter {
    std::string gen;
    std::int64_t exp = 1;
    bool operator==(const Letter&) const = default;
};

// Freely reduced word in the group generators.
struct Word {
    std::vector<Letter> letters;

    bool empty() const { return letters.empty(); }
    // Appends one letter, merging with the tail and dropping cancellations.
    void append(const std::string& gen, std::int64_t exp);
    void append(const Word& w);
    Word inverse() const;
    Word power(std::int64_t k) const;
    std::string to_string() const;
    bool operator==(const Word&) const = default;
};

// Parses "a1*th2^-3*(c*b4)^2" style syntax into a freely reduced Word.
Word parse_word(const std::string& text);

struct GroupPresentation {
    std::vector<std::string> generators;
    std::vector<Word> relators;
    // Human-readable origin of each relator ("w1 = w2" chain segment).
    std::vector<std::string> relator_names;

    bool has_generator(const std::string& name) const;
};

// Parses the presentation DSL:
//   # comment
//   generators: a1 b1 ... c
//   w1 = w2 = w3        (chains expand to pairwise relators w1*w2^-1, ...)
//   w                   (single word: the relator w itself)
GroupPresentation parse_presentation(const std::string& text);

// The shipped presentation of the fundamental group of the glued 3-manifold:
// four boundary tori with generators a_i, b_i, th_i plus the cover shift c.
const std::string& default_presentation_text();
const GroupPresentation& default_presentation();

// ---------------------------------------------------------------------------
// Exponent tuples and the representation
// ---------------------------------------------------------------------------

// The 13 integer exponents (t0; t1..t4; m1..m4; n1..n4) that define a
// candidate representation. The relators force the linear constraints
//   t1 = n2-m2 = m4-n4,  t2 = n3-m3 = m1-n1,
//   t3 = n4-m4 = m2-n2,  t4 = n1-m1 = m3-n3,
// hence t3 = -t1 and t4 = -t2.
struct ExponentTuple {
    std::int64_t t0 = 0;
    std::int64_t t[4] = {0, 0, 0, 0};
    std::int64_t m[4] = {0, 0, 0, 0};
    std::int64_t n[4] = {0, 0, 0, 0};

    bool operator==(const ExponentTuple&) const = default;
    bool is_consistent() const;
    // Throws InconsistentExponents naming the first violated equation.
    void validate() const;
    std::string to_string() const;
};

// The reference tuple used throughout: t0=1, m=(1,3,5,6), n=(2,4,4,5),
// t=(1,-1,-1,1).
ExponentTuple default_exponents();

// The two 4x4 blocks: C = diag(C1, C2) with C1 = (2 1; 1 1), C2 = C1^{-1},
// and the swap block D = (0 D1; D2 0) with D1 = C2^2, D2 = C1^2.
// They satisfy D^2 = I and D^{-1} C D = C^{-1}.
std::pair<IntMatrix, IntMatrix> build_blocks();

// Block-diagonal replication of a b x b block up to dimension d (d a
// multiple of b); used to lift the 4x4 pair to higher even dimensions.
IntMatrix block_replicate(const IntMatrix& block, int d);

struct Representation {
    int d = 4;
    ExponentTuple exponents;
    std::map<std::string, IntMatrix> images;

    const IntMatrix& image(const std::string& gen) const; // UnknownGenerator
};

enum class TupleCheck { Enforce, Skip };

// Builds generator images: rho(th_i) = C^{t_i}, rho(c) = C^{t0},
// rho(a_i) = C^{m_i} D, rho(b_i) = C^{n_i} D. Dimensions above 4 replicate
// the (C, D) pair block-diagonally, so d must be a positive multiple of 4.
Representation build_representation(const ExponentTuple& e, int d = 4,
                                    TupleCheck check = TupleCheck::Enforce);

// Exact product of generator images along the word.
IntMatrix eval_word(const Representation& rep, const Word& w);

struct RelatorCheckRow {
    std::string name;
    bool pass = false;
};

struct RelatorReport {
    std::vector<RelatorCheckRow> rows;
    bool all_pass = true;
    std::string to_text() const; // stable key order, diff-friendly
};

RelatorReport check_relators(const Representation& rep, const GroupPresentation& pres);

// Fast all-relator predicate (stops at the first failure).
bool relators_hold(const Representation& rep, const GroupPresentation& pres);

// ---------------------------------------------------------------------------
// Exponent solver
// ---------------------------------------------------------------------------

using TupleVisitor = std::function<void(const ExponentTuple&)>;

// Enumerates every tuple in the box [lo, hi]^13 satisfying the linear
// relator constraints, in deterministic lexicographic order of the free
// variables (t0, t1, t2, m1..m4). Returns the solution count; the visitor
// (if any) sees each solution.
std::uint64_t solve_exponents(std::int64_t lo, std::int64_t hi,
                              const TupleVisitor& visit = nullptr);

// Independent oracle: enumerates the full box and filters by evaluating the
// shipped relator list on the constructed representation. Intended for small
// boxes (width <= 5); cost grows as width^13.
std::uint64_t solve_exponents_brute_force(std::int64_t lo, std::int64_t hi,
                                          const TupleVisitor& visit = nullptr);

// ---------------------------------------------------------------------------
// Spectral checks
// ---------------------------------------------------------------------------

struct SpectralReport {
    std::vector<std::complex<double>> eigenvalues; // sorted by modulus, desc
    bool hyperbolic = false;
    Eigen::MatrixXd stable;   // orthonormal basis, moduli < 1 (empty if none)
    Eigen::MatrixXd unstable; // orthonormal basis, moduli > 1
    double residual = 0.0;    // max normalized eigenpair residual
    std::string to_text() const;
};

// Eigen-decomposition with residual control: hyperbolic iff every eigenvalue
// modulus differs from 1 by more than tol. Throws IllConditioned when the
// eigen-solve residual exceeds tol.
SpectralReport spectral_check(const IntMatrix& M, double tol = 1e-12);

struct CommonSplitting {
    Eigen::MatrixXd stable;
    Eigen::MatrixXd unstable;
};

// Finds one splitting R^d = E^s + E^u invariant under every listed matrix.
// Throws NotHyperbolic if any input fails spectral_check's hyperbolicity,
// NoCommonSplitting (with swap_detected when a matrix exchanges the two
// subspaces) otherwise.
CommonSplitting common_splitting(const std::vector<IntMatrix>& mats, double tol = 1e-10);

} // namespace blflow
