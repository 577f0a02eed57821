#include "blflow/group_rep.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>

namespace blflow {

namespace {

using i128 = __int128;

constexpr std::int64_t kEntryLimit = std::int64_t(1) << 62;

std::int64_t narrow_checked(i128 v, const char* what) {
    if (v > i128(INT64_MAX) || v < i128(INT64_MIN))
        throw OverflowError(std::string(what) + ": entry exceeds 64-bit range");
    return std::int64_t(v);
}

} // namespace

// ---------------------------------------------------------------------------
// IntMatrix
// ---------------------------------------------------------------------------

IntMatrix::IntMatrix(int dim) : d_(dim), a_(std::size_t(dim) * dim, 0) {
    if (dim <= 0) throw ConfigError("IntMatrix: dimension must be positive");
}

IntMatrix IntMatrix::identity(int dim) {
    IntMatrix m(dim);
    for (int i = 0; i < dim; ++i) m(i, i) = 1;
    return m;
}

IntMatrix IntMatrix::operator*(const IntMatrix& rhs) const {
    if (d_ != rhs.d_) throw DimensionMismatch("IntMatrix product: dimensions differ");
    IntMatrix out(d_);
    for (int i = 0; i < d_; ++i) {
        for (int j = 0; j < d_; ++j) {
            i128 acc = 0;
            for (int k = 0; k < d_; ++k) acc += i128((*this)(i, k)) * i128(rhs(k, j));
            out(i, j) = narrow_checked(acc, "IntMatrix product");
        }
    }
    return out;
}

bool IntMatrix::is_identity() const {
    for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j)
            if ((*this)(i, j) != (i == j ? 1 : 0)) return false;
    return true;
}

bool IntMatrix::is_symmetric() const {
    for (int i = 0; i < d_; ++i)
        for (int j = i + 1; j < d_; ++j)
            if ((*this)(i, j) != (*this)(j, i)) return false;
    return true;
}

namespace {

// Fraction-free elimination; divisions are exact by construction. The
// intermediates are minors of the input, kept in 128 bits with a magnitude
// guard so overflow surfaces as an error rather than a wrong determinant.
std::int64_t det_bareiss(std::vector<i128> m, int n) {
    int sign = 1;
    i128 prev = 1;
    auto at = [&](int i, int j) -> i128& { return m[std::size_t(i) * n + j]; };
    for (int k = 0; k + 1 < n; ++k) {
        if (at(k, k) == 0) {
            int p = -1;
            for (int i = k + 1; i < n; ++i)
                if (at(i, k) != 0) { p = i; break; }
            if (p < 0) return 0;
            for (int j = 0; j < n; ++j) std::swap(at(k, j), at(p, j));
            sign = -sign;
        }
        for (int i = k + 1; i < n; ++i) {
            for (int j = k + 1; j < n; ++j) {
                i128 a = at(i, j), b = at(k, k), c = at(i, k), d = at(k, j);
                for (i128 v : {a, b, c, d})
                    if (v > i128(kEntryLimit) || v < -i128(kEntryLimit))
                        throw OverflowError("determinant: intermediate exceeds safe range");
                at(i, j) = (a * b - c * d) / prev;
            }
            at(i, k) = 0;
        }
        prev = at(k, k);
    }
    return sign * narrow_checked(at(n - 1, n - 1), "determinant");
}

} // namespace

std::int64_t IntMatrix::det() const {
    std::vector<i128> m(a_.begin(), a_.end());
    return det_bareiss(std::move(m), d_);
}

IntMatrix IntMatrix::inverse() const {
    std::int64_t dt = det();
    if (dt != 1 && dt != -1)
        throw NotInvertible("IntMatrix inverse: determinant is " + std::to_string(dt) +
                            ", not +-1");
    IntMatrix inv(d_);
    // inv(i,j) = sign(i+j) * det(minor with row j, column i removed) / det
    for (int i = 0; i < d_; ++i) {
        for (int j = 0; j < d_; ++j) {
            std::vector<i128> minor;
            minor.reserve(std::size_t(d_ - 1) * (d_ - 1));
            for (int r = 0; r < d_; ++r) {
                if (r == j) continue;
                for (int c = 0; c < d_; ++c) {
                    if (c == i) continue;
                    minor.push_back((*this)(r, c));
                }
            }
            std::int64_t cof = (d_ == 1) ? 1 : det_bareiss(std::move(minor), d_ - 1);
            if ((i + j) % 2 != 0) cof = -cof;
            inv(i, j) = dt * cof;
        }
    }
    return inv;
}

IntMatrix IntMatrix::pow(std::int64_t k) const {
    if (k < 0) return inverse().pow(-k);
    IntMatrix out = identity(d_);
    IntMatrix base = *this;
    std::int64_t e = k;
    while (e > 0) {
        if (e & 1) out = out * base;
        e >>= 1;
        if (e > 0) base = base * base;
    }
    return out;
}

Eigen::MatrixXd IntMatrix::to_real() const {
    Eigen::MatrixXd m(d_, d_);
    for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j) m(i, j) = double((*this)(i, j));
    return m;
}

std::string IntMatrix::to_string() const {
    std::ostringstream os;
    for (int i = 0; i < d_; ++i) {
        os << (i == 0 ? "[" : " ");
        for (int j = 0; j < d_; ++j) os << (j ? " " : "") << (*this)(i, j);
        os << (i + 1 == d_ ? "]" : ";\n");
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Words
// ---------------------------------------------------------------------------

void Word::append(const std::string& gen, std::int64_t exp) {
    if (exp == 0) return;
    if (!letters.empty() && letters.back().gen == gen) {
        letters.back().exp += exp;
        if (letters.back().exp == 0) letters.pop_back();
        return;
    }
    letters.push_back({gen, exp});
}

void Word::append(const Word& w) {
    for (const auto& l : w.letters) append(l.gen, l.exp);
}

Word Word::inverse() const {
    Word out;
    for (auto it = letters.rbegin(); it != letters.rend(); ++it) out.append(it->gen, -it->exp);
    return out;
}

Word Word::power(std::int64_t k) const {
    if (k < 0) return inverse().power(-k);
    Word out;
    for (std::int64_t i = 0; i < k; ++i) out.append(*this);
    return out;
}

std::string Word::to_string() const {
    if (letters.empty()) return "1";
    std::string s;
    for (const auto& l : letters) {
        if (!s.empty()) s += '*';
        s += l.gen;
        if (l.exp != 1) s += '^' + std::to_string(l.exp);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Word / presentation parsing
// ---------------------------------------------------------------------------

namespace {

struct WordParser {
    const std::string& s;
    int line;
    std::size_t pos = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw SyntaxError(msg, line, int(pos) + 1);
    }
    void skip_ws() {
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    }
    bool eof() {
        skip_ws();
        return pos >= s.size();
    }
    char peek() {
        skip_ws();
        return pos < s.size() ? s[pos] : '\0';
    }

    std::int64_t parse_int() {
        skip_ws();
        std::size_t start = pos;
        if (pos < s.size() && (s[pos] == '-' || s[pos] == '+')) ++pos;
        if (pos >= s.size() || !std::isdigit(static_cast<unsigned char>(s[pos])))
            fail("expected an integer exponent");
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
        return std::stoll(s.substr(start, pos - start));
    }

    Word parse_atom() {
        skip_ws();
        if (pos >= s.size()) fail("expected a generator or '('");
        if (s[pos] == '(') {
            ++pos;
            Word w = parse_word();
            if (peek() != ')') fail("expected ')'");
            ++pos;
            return w;
        }
        if (!std::isalpha(static_cast<unsigned char>(s[pos])) && s[pos] != '_')
            fail(std::string("unexpected character '") + s[pos] + "'");
        std::size_t start = pos;
        while (pos < s.size() &&
               (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
            ++pos;
        Word w;
        w.append(s.substr(start, pos - start), 1);
        return w;
    }

    Word parse_factor() {
        Word w = parse_atom();
        if (peek() == '^') {
            ++pos;
            w = w.power(parse_int());
        }
        return w;
    }

    Word parse_word() {
        Word w = parse_factor();
        while (peek() == '*') {
            ++pos;
            Word f = parse_factor();
            w.append(f);
        }
        return w;
    }

    Word parse_all() {
        Word w = parse_word();
        if (!eof()) fail(std::string("unexpected trailing character '") + s[pos] + "'");
        return w;
    }
};

Word parse_word_at(const std::string& text, int line) {
    WordParser p{text, line};
    return p.parse_all();
}

std::string strip_comment(const std::string& line) {
    auto h = line.find('#');
    return h == std::string::npos ? line : line.substr(0, h);
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

Word parse_word(const std::string& text) { return parse_word_at(text, 1); }

bool GroupPresentation::has_generator(const std::string& name) const {
    return std::find(generators.begin(), generators.end(), name) != generators.end();
}

GroupPresentation parse_presentation(const std::string& text) {
    GroupPresentation pres;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    bool saw_generators = false;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (!saw_generators) {
            const std::string key = "generators:";
            if (line.rfind(key, 0) != 0)
                throw SyntaxError("expected a 'generators:' line first", line_no, 1);
            std::istringstream gs(line.substr(key.size()));
            std::string g;
            while (gs >> g) {
                if (pres.has_generator(g))
                    throw SyntaxError("duplicate generator '" + g + "'", line_no, 1);
                pres.generators.push_back(g);
            }
            if (pres.generators.empty())
                throw SyntaxError("empty generator list", line_no, 1);
            saw_generators = true;
            continue;
        }
        // split the relator chain on '='
        std::vector<std::string> parts;
        std::size_t start = 0;
        while (true) {
            auto eq = line.find('=', start);
            if (eq == std::string::npos) {
                parts.push_back(trim(line.substr(start)));
                break;
            }
            parts.push_back(trim(line.substr(start, eq - start)));
            start = eq + 1;
        }
        std::vector<Word> words;
        for (const auto& p : parts) {
            if (p.empty()) throw SyntaxError("empty word in relator chain", line_no, 1);
            words.push_back(parse_word_at(p, line_no));
        }
        for (const auto& w : words)
            for (const auto& l : w.letters)
                if (!pres.has_generator(l.gen))
                    throw UnknownGenerator("unknown generator '" + l.gen + "' (line " +
                                           std::to_string(line_no) + ")");
        if (words.size() == 1) {
            pres.relators.push_back(words[0]);
            pres.relator_names.push_back(parts[0]);
        } else {
            for (std::size_t k = 0; k + 1 < words.size(); ++k) {
                Word r = words[k];
                r.append(words[k + 1].inverse());
                pres.relators.push_back(std::move(r));
                pres.relator_names.push_back(parts[k] + " = " + parts[k + 1]);
            }
        }
    }
    if (!saw_generators) throw SyntaxError("presentation has no 'generators:' line", 1, 1);
    return pres;
}

const std::string& default_presentation_text() {
    static const std::string text =
        "# fundamental group of the glued 3-manifold: one a/b/th triple per\n"
        "# boundary torus, plus the cover-shift generator c\n"
        "generators: a1 a2 a3 a4 b1 b2 b3 b4 th1 th2 th3 th4 c\n"
        "th1 = a1*th1^-1*a1^-1 = b1*th1^-1*b1^-1 = (a2*b2)^-1 = c^4*a4*b4^-1*c^-4\n"
        "th2 = a2*th2^-1*a2^-1 = b2*th2^-1*b2^-1 = a1*b1^-1 = (a3*b3)^-1\n"
        "th3 = a3*th3^-1*a3^-1 = b3*th3^-1*b3^-1 = a2*b2^-1 = (a4*b4)^-1\n"
        "th4 = a4*th4^-1*a4^-1 = b4*th4^-1*b4^-1 = a3*b3^-1 = c^-4*(a1*b1)^-1*c^4\n";
    return text;
}

const GroupPresentation& default_presentation() {
    static const GroupPresentation pres = parse_presentation(default_presentation_text());
    return pres;
}

// ---------------------------------------------------------------------------
// Exponent tuples
// ---------------------------------------------------------------------------

namespace {

struct LinearConstraint {
    const char* name;
    std::int64_t lhs, rhs;
};

std::vector<LinearConstraint> constraints_of(const ExponentTuple& e) {
    return {
        {"t1 = n2 - m2", e.t[0], e.n[1] - e.m[1]},
        {"t1 = m4 - n4", e.t[0], e.m[3] - e.n[3]},
        {"t2 = n3 - m3", e.t[1], e.n[2] - e.m[2]},
        {"t2 = m1 - n1", e.t[1], e.m[0] - e.n[0]},
        {"t3 = n4 - m4", e.t[2], e.n[3] - e.m[3]},
        {"t3 = m2 - n2", e.t[2], e.m[1] - e.n[1]},
        {"t4 = n1 - m1", e.t[3], e.n[0] - e.m[0]},
        {"t4 = m3 - n3", e.t[3], e.m[2] - e.n[2]},
    };
}

} // namespace

bool ExponentTuple::is_consistent() const {
    for (const auto& c : constraints_of(*this))
        if (c.lhs != c.rhs) return false;
    return true;
}

void ExponentTuple::validate() const {
    for (const auto& c : constraints_of(*this))
        if (c.lhs != c.rhs)
            throw InconsistentExponents(std::string(c.name) + " fails: " +
                                        std::to_string(c.lhs) + " != " +
                                        std::to_string(c.rhs));
}

std::string ExponentTuple::to_string() const {
    std::ostringstream os;
    os << "t0=" << t0 << " t=(" << t[0] << "," << t[1] << "," << t[2] << "," << t[3]
       << ") m=(" << m[0] << "," << m[1] << "," << m[2] << "," << m[3] << ") n=(" << n[0]
       << "," << n[1] << "," << n[2] << "," << n[3] << ")";
    return os.str();
}

ExponentTuple default_exponents() {
    ExponentTuple e;
    e.t0 = 1;
    e.t[0] = 1;
    e.t[1] = -1;
    e.t[2] = -1;
    e.t[3] = 1;
    e.m[0] = 1;
    e.m[1] = 3;
    e.m[2] = 5;
    e.m[3] = 6;
    e.n[0] = 2;
    e.n[1] = 4;
    e.n[2] = 4;
    e.n[3] = 5;
    return e;
}

// ---------------------------------------------------------------------------
// Representation
// ---------------------------------------------------------------------------

std::pair<IntMatrix, IntMatrix> build_blocks() {
    IntMatrix C(4), D(4);
    // C = diag(C1, C2), C1 = (2 1; 1 1), C2 = C1^{-1} = (1 -1; -1 2)
    C(0, 0) = 2; C(0, 1) = 1;
    C(1, 0) = 1; C(1, 1) = 1;
    C(2, 2) = 1; C(2, 3) = -1;
    C(3, 2) = -1; C(3, 3) = 2;
    // D = (0 D1; D2 0), D1 = C2^2 = (2 -3; -3 5), D2 = C1^2 = (5 3; 3 2)
    D(0, 2) = 2; D(0, 3) = -3;
    D(1, 2) = -3; D(1, 3) = 5;
    D(2, 0) = 5; D(2, 1) = 3;
    D(3, 0) = 3; D(3, 1) = 2;
    return {C, D};
}

IntMatrix block_replicate(const IntMatrix& block, int d) {
    int b = block.dim();
    if (d < b || d % b != 0)
        throw ConfigError("block_replicate: dimension must be a positive multiple of " +
                          std::to_string(b));
    IntMatrix out(d);
    for (int off = 0; off < d; off += b)
        for (int i = 0; i < b; ++i)
            for (int j = 0; j < b; ++j) out(off + i, off + j) = block(i, j);
    return out;
}

const IntMatrix& Representation::image(const std::string& gen) const {
    auto it = images.find(gen);
    if (it == images.end()) throw UnknownGenerator("no image for generator '" + gen + "'");
    return it->second;
}

Representation build_representation(const ExponentTuple& e, int d, TupleCheck check) {
    if (check == TupleCheck::Enforce) e.validate();
    if (d < 4 || d % 4 != 0)
        throw ConfigError("representation dimension must be a positive multiple of 4");
    auto [C4, D4] = build_blocks();
    IntMatrix C = block_replicate(C4, d);
    IntMatrix D = block_replicate(D4, d);
    Representation rep;
    rep.d = d;
    rep.exponents = e;
    rep.images.emplace("c", C.pow(e.t0));
    for (int i = 0; i < 4; ++i) {
        std::string k = std::to_string(i + 1);
        rep.images.emplace("th" + k, C.pow(e.t[i]));
        rep.images.emplace("a" + k, C.pow(e.m[i]) * D);
        rep.images.emplace("b" + k, C.pow(e.n[i]) * D);
    }
    return rep;
}

IntMatrix eval_word(const Representation& rep, const Word& w) {
    IntMatrix out = IntMatrix::identity(rep.d);
    for (const auto& l : w.letters) out = out * rep.image(l.gen).pow(l.exp);
    return out;
}

RelatorReport check_relators(const Representation& rep, const GroupPresentation& pres) {
    RelatorReport rpt;
    for (std::size_t i = 0; i < pres.relators.size(); ++i) {
        bool ok = eval_word(rep, pres.relators[i]).is_identity();
        std::string name = i < pres.relator_names.size() ? pres.relator_names[i]
                                                         : pres.relators[i].to_string();
        rpt.rows.push_back({name, ok});
        rpt.all_pass = rpt.all_pass && ok;
    }
    return rpt;
}

bool relators_hold(const Representation& rep, const GroupPresentation& pres) {
    for (const auto& r : pres.relators)
        if (!eval_word(rep, r).is_identity()) return false;
    return true;
}

std::string RelatorReport::to_text() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < rows.size(); ++i)
        os << "relator " << i + 1 << " [" << rows[i].name << "]: "
           << (rows[i].pass ? "PASS" : "FAIL") << "\n";
    os << "all_pass: " << (all_pass ? "true" : "false") << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Exponent solver
// ---------------------------------------------------------------------------

std::uint64_t solve_exponents(std::int64_t lo, std::int64_t hi, const TupleVisitor& visit) {
    if (lo > hi) throw ConfigError("solve_exponents: empty range");
    // Free variables: t0, t1, t2, m1..m4; the constraints force
    //   t3 = -t1, t4 = -t2,
    //   n1 = m1 - t2, n2 = m2 + t1, n3 = m3 + t2, n4 = m4 - t1.
    // Loop bounds are intersected so derived values stay in the box.
    std::uint64_t count = 0;
    auto clamp_lo = [&](std::int64_t v) { return std::max(lo, v); };
    auto clamp_hi = [&](std::int64_t v) { return std::min(hi, v); };
    for (std::int64_t t0 = lo; t0 <= hi; ++t0) {
        for (std::int64_t t1 = clamp_lo(-hi); t1 <= clamp_hi(-lo); ++t1) {
            // m2 + t1 and m4 - t1 must lie in the box
            std::int64_t m2lo = clamp_lo(lo - t1), m2hi = clamp_hi(hi - t1);
            std::int64_t m4lo = clamp_lo(lo + t1), m4hi = clamp_hi(hi + t1);
            if (m2lo > m2hi || m4lo > m4hi) continue;
            for (std::int64_t t2 = clamp_lo(-hi); t2 <= clamp_hi(-lo); ++t2) {
                std::int64_t m1lo = clamp_lo(lo + t2), m1hi = clamp_hi(hi + t2);
                std::int64_t m3lo = clamp_lo(lo - t2), m3hi = clamp_hi(hi - t2);
                if (m1lo > m1hi || m3lo > m3hi) continue;
                if (!visit) {
                    count += std::uint64_t(m1hi - m1lo + 1) * std::uint64_t(m2hi - m2lo + 1) *
                             std::uint64_t(m3hi - m3lo + 1) * std::uint64_t(m4hi - m4lo + 1);
                    continue;
                }
                for (std::int64_t m1 = m1lo; m1 <= m1hi; ++m1)
                    for (std::int64_t m2 = m2lo; m2 <= m2hi; ++m2)
                        for (std::int64_t m3 = m3lo; m3 <= m3hi; ++m3)
                            for (std::int64_t m4 = m4lo; m4 <= m4hi; ++m4) {
                                ExponentTuple e;
                                e.t0 = t0;
                                e.t[0] = t1;
                                e.t[1] = t2;
                                e.t[2] = -t1;
                                e.t[3] = -t2;
                                e.m[0] = m1;
                                e.m[1] = m2;
                                e.m[2] = m3;
                                e.m[3] = m4;
                                e.n[0] = m1 - t2;
                                e.n[1] = m2 + t1;
                                e.n[2] = m3 + t2;
                                e.n[3] = m4 - t1;
                                ++count;
                                visit(e);
                            }
            }
        }
    }
    return count;
}

namespace {

// allocation-free 4x4 integer matrix for the hot brute-force loop; the
// arithmetic is the same checked 128-bit accumulation as IntMatrix
struct M4 {
    std::int64_t a[16];

    static M4 id() {
        M4 m{};
        m.a[0] = m.a[5] = m.a[10] = m.a[15] = 1;
        return m;
    }
    static M4 from(const IntMatrix& src) {
        M4 m;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) m.a[i * 4 + j] = src(i, j);
        return m;
    }
    void mul_into(const M4& rhs, M4& out) const {
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                i128 acc = 0;
                for (int k = 0; k < 4; ++k) acc += i128(a[i * 4 + k]) * i128(rhs.a[k * 4 + j]);
                out.a[i * 4 + j] = narrow_checked(acc, "brute-force product");
            }
    }
    bool is_identity() const {
        for (int i = 0; i < 16; ++i)
            if (a[i] != (i % 5 == 0 ? 1 : 0)) return false;
        return true;
    }
};

} // namespace

std::uint64_t solve_exponents_brute_force(std::int64_t lo, std::int64_t hi,
                                          const TupleVisitor& visit) {
    if (lo > hi) throw ConfigError("solve_exponents_brute_force: empty range");
    const GroupPresentation& pres = default_presentation();

    // generator ids in presentation order; relators pre-encoded as id/exp runs
    auto gen_id = [&](const std::string& g) {
        for (std::size_t i = 0; i < pres.generators.size(); ++i)
            if (pres.generators[i] == g) return int(i);
        throw UnknownGenerator("brute force: unknown generator '" + g + "'");
    };
    std::vector<std::vector<std::pair<int, std::int64_t>>> relators;
    for (const auto& r : pres.relators) {
        std::vector<std::pair<int, std::int64_t>> enc;
        for (const auto& l : r.letters) enc.emplace_back(gen_id(l.gen), l.exp);
        relators.push_back(std::move(enc));
    }

    // every image is C^k or C^k * D with k in the box; inverses are
    // C^{-k} and D * C^{-k}, so one symmetric power table covers both
    auto [C4i, D4i] = build_blocks();
    const M4 D4 = M4::from(D4i);
    std::int64_t plo = std::min(lo, -hi), phi = std::max(hi, -lo);
    std::vector<M4> cpow;
    for (std::int64_t k = plo; k <= phi; ++k) cpow.push_back(M4::from(C4i.pow(k)));
    auto cp = [&](std::int64_t k) -> const M4& { return cpow[std::size_t(k - plo)]; };

    const int n_gen = int(pres.generators.size());
    std::vector<M4> img(n_gen), inv(n_gen);
    auto set_pair = [&](int id, std::int64_t k, bool with_d) {
        if (!with_d) {
            img[id] = cp(k);
            inv[id] = cp(-k);
        } else {
            cp(k).mul_into(D4, img[id]);      // C^k D
            D4.mul_into(cp(-k), inv[id]);     // (C^k D)^{-1} = D C^{-k}
        }
    };

    auto all_relators_pass = [&]() {
        M4 acc, tmp;
        for (const auto& r : relators) {
            acc = M4::id();
            for (const auto& [id, exp] : r) {
                const M4& f = exp > 0 ? img[id] : inv[id];
                for (std::int64_t rep = std::llabs(exp); rep > 0; --rep) {
                    acc.mul_into(f, tmp);
                    acc = tmp;
                }
            }
            if (!acc.is_identity()) return false;
        }
        return true;
    };

    int id_th[4], id_a[4], id_b[4];
    for (int i = 0; i < 4; ++i) {
        std::string k = std::to_string(i + 1);
        id_th[i] = gen_id("th" + k);
        id_a[i] = gen_id("a" + k);
        id_b[i] = gen_id("b" + k);
    }
    const int id_c = gen_id("c");

    std::uint64_t count = 0;
    std::int64_t v[13];
    // order: t0, t1..t4, m1..m4, n1..n4
    std::function<void(int)> rec = [&](int idx) {
        if (idx == 13) {
            ExponentTuple e;
            e.t0 = v[0];
            for (int i = 0; i < 4; ++i) e.t[i] = v[1 + i];
            for (int i = 0; i < 4; ++i) e.m[i] = v[5 + i];
            for (int i = 0; i < 4; ++i) e.n[i] = v[9 + i];
            for (int i = 0; i < 4; ++i) {
                set_pair(id_th[i], e.t[i], false);
                set_pair(id_a[i], e.m[i], true);
                set_pair(id_b[i], e.n[i], true);
            }
            set_pair(id_c, e.t0, false);
            if (all_relators_pass()) {
                ++count;
                if (visit) visit(e);
            }
            return;
        }
        for (std::int64_t x = lo; x <= hi; ++x) {
            v[idx] = x;
            rec(idx + 1);
        }
    };
    rec(0);
    return count;
}

// ---------------------------------------------------------------------------
// Spectral checks
// ---------------------------------------------------------------------------

namespace {

// orthonormalize the columns of B and trim to the expected rank
Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& B, int rank) {
    if (B.cols() == 0 || rank == 0) return Eigen::MatrixXd(B.rows(), 0);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(B);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(B.rows(), rank);
    return Q;
}

} // namespace

SpectralReport spectral_check(const IntMatrix& M, double tol) {
    SpectralReport rpt;
    Eigen::MatrixXd A = M.to_real();
    const int d = int(A.rows());
    Eigen::VectorXcd evals;
    Eigen::MatrixXcd evecs;
    if (M.is_symmetric()) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
        if (es.info() != Eigen::Success)
            throw IllConditioned("symmetric eigen-solve did not converge");
        evals = es.eigenvalues().cast<std::complex<double>>();
        evecs = es.eigenvectors().cast<std::complex<double>>();
    } else {
        Eigen::EigenSolver<Eigen::MatrixXd> es(A);
        if (es.info() != Eigen::Success)
            throw IllConditioned("eigen-solve did not converge");
        evals = es.eigenvalues();
        evecs = es.eigenvectors();
    }

    double scale = std::max(1.0, A.norm());
    Eigen::MatrixXcd Ac = A.cast<std::complex<double>>();
    for (int i = 0; i < d; ++i) {
        Eigen::VectorXcd vi = evecs.col(i).normalized();
        double r = (Ac * vi - evals[i] * vi).norm() / scale;
        rpt.residual = std::max(rpt.residual, r);
    }
    if (rpt.residual > tol)
        throw IllConditioned("eigen-solve residual " + std::to_string(rpt.residual) +
                             " exceeds tolerance");

    std::vector<int> order(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) order[std::size_t(i)] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        double ma = std::abs(evals[a]), mb = std::abs(evals[b]);
        if (ma != mb) return ma > mb;
        if (evals[a].real() != evals[b].real()) return evals[a].real() > evals[b].real();
        return evals[a].imag() > evals[b].imag();
    });

    rpt.hyperbolic = true;
    Eigen::MatrixXd sb(d, d), ub(d, d);
    int ns = 0, nu = 0;
    for (int idx : order) {
        std::complex<double> lam = evals[idx];
        rpt.eigenvalues.push_back(lam);
        double mod = std::abs(lam);
        if (std::fabs(mod - 1.0) <= tol) {
            rpt.hyperbolic = false;
            continue;
        }
        Eigen::VectorXcd vi = evecs.col(idx);
        // complex pairs contribute their real and imaginary parts; the
        // conjugate twin then adds nothing new and QR trims the redundancy
        if (mod < 1.0) {
            sb.col(ns++) = vi.real();
            if (vi.imag().norm() > 1e-14 && ns < d) sb.col(ns++) = vi.imag();
        } else {
            ub.col(nu++) = vi.real();
            if (vi.imag().norm() > 1e-14 && nu < d) ub.col(nu++) = vi.imag();
        }
    }
    int dim_s = 0, dim_u = 0;
    for (const auto& lam : rpt.eigenvalues) {
        double mod = std::abs(lam);
        if (mod < 1.0 - tol) ++dim_s;
        if (mod > 1.0 + tol) ++dim_u;
    }
    rpt.stable = orthonormalize(sb.leftCols(ns), dim_s);
    rpt.unstable = orthonormalize(ub.leftCols(nu), dim_u);
    return rpt;
}

std::string SpectralReport::to_text() const {
    std::ostringstream os;
    os << "eigenvalues:";
    char buf[80];
    for (const auto& l : eigenvalues) {
        std::snprintf(buf, sizeof buf, " %.15g%+.15gi(|.|=%.15g)", l.real(), l.imag(),
                      std::abs(l));
        os << buf;
    }
    os << "\nhyperbolic: " << (hyperbolic ? "true" : "false");
    os << "\nstable_dim: " << stable.cols() << "\nunstable_dim: " << unstable.cols();
    std::snprintf(buf, sizeof buf, "\nresidual: %.3e\n", residual);
    os << buf;
    return os.str();
}

CommonSplitting common_splitting(const std::vector<IntMatrix>& mats, double tol) {
    if (mats.empty()) throw ConfigError("common_splitting: empty matrix list");
    SpectralReport seed = spectral_check(mats[0], 1e-12);
    if (!seed.hyperbolic)
        throw NotHyperbolic("matrix 1 has an eigenvalue on the unit circle");
    const Eigen::MatrixXd& Qs = seed.stable;
    const Eigen::MatrixXd& Qu = seed.unstable;
    auto leakage = [&](const Eigen::MatrixXd& img, const Eigen::MatrixXd& Q) {
        // fraction of img escaping span(Q)
        Eigen::MatrixXd resid = img - Q * (Q.transpose() * img);
        double den = std::max(img.norm(), 1e-300);
        return resid.norm() / den;
    };
    for (std::size_t k = 1; k < mats.size(); ++k) {
        Eigen::MatrixXd A = mats[k].to_real();
        Eigen::MatrixXd As = A * Qs, Au = A * Qu;
        bool keeps = leakage(As, Qs) <= tol && leakage(Au, Qu) <= tol;
        if (!keeps) {
            // a swap (the matrix exchanges the two subspaces, as conjugation
            // to the inverse does) is diagnosed before hyperbolicity so the
            // report names the structural reason
            bool swaps = leakage(As, Qu) <= tol && leakage(Au, Qs) <= tol;
            throw NoCommonSplitting(
                swaps ? "matrix " + std::to_string(k + 1) +
                            " swaps the stable and unstable subspaces of matrix 1"
                      : "matrix " + std::to_string(k + 1) +
                            " does not preserve the splitting of matrix 1",
                int(k), swaps);
        }
        if (!spectral_check(mats[k], 1e-12).hyperbolic)
            throw NotHyperbolic("matrix " + std::to_string(k + 1) +
                                " has an eigenvalue on the unit circle");
    }
    return {Qs, Qu};
}

} // namespace blflow
