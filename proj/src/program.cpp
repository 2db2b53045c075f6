#include <charconv>
#include <cmath>
#include <cstdlib>
#include <functional>

#include "samplecraft/io.hpp"
#include "samplecraft/program.hpp"
#include "samplecraft/targets.hpp"

namespace samplecraft {

const char* loss_name(LossKind kind) {
    switch (kind) {
    case LossKind::Bn: return "bn";
    case LossKind::Spec: return "spec";
    case LossKind::Pcf: return "pcf";
    case LossKind::Aniso: return "aniso";
    case LossKind::Disc: return "disc";
    case LossKind::Task: return "task";
    }
    return "?";
}

namespace {

bool loss_from_name(const std::string& name, LossKind& out) {
    if (name == "bn") out = LossKind::Bn;
    else if (name == "spec") out = LossKind::Spec;
    else if (name == "pcf") out = LossKind::Pcf;
    else if (name == "aniso") out = LossKind::Aniso;
    else if (name == "disc") out = LossKind::Disc;
    else if (name == "task") out = LossKind::Task;
    else return false;
    return true;
}

bool takes_file(LossKind kind) {
    return kind == LossKind::Spec || kind == LossKind::Pcf || kind == LossKind::Task;
}

} // namespace

PointExpr PointExpr::clone() const {
    PointExpr e;
    e.kind = kind;
    e.dims = dims;
    e.line = line;
    e.col = col;
    if (child) e.child = std::make_unique<PointExpr>(child->clone());
    return e;
}

bool operator==(const PointExpr& a, const PointExpr& b) {
    if (a.kind != b.kind || a.dims != b.dims) return false;
    if (bool(a.child) != bool(b.child)) return false;
    return !a.child || *a.child == *b.child;
}

ProgramTerm ProgramTerm::clone() const {
    ProgramTerm t;
    t.weight = weight;
    t.loss = loss;
    t.expr = expr.clone();
    t.args = args;
    t.line = line;
    t.col = col;
    return t;
}

bool operator==(const ProgramTerm& a, const ProgramTerm& b) {
    return a.weight == b.weight && a.loss == b.loss && a.args == b.args && a.expr == b.expr;
}

ProgramAst ProgramAst::clone() const {
    ProgramAst ast;
    ast.terms.reserve(terms.size());
    for (const auto& t : terms) ast.terms.push_back(t.clone());
    return ast;
}

bool operator==(const ProgramAst& a, const ProgramAst& b) {
    if (a.terms.size() != b.terms.size()) return false;
    for (size_t i = 0; i < a.terms.size(); ++i)
        if (!(a.terms[i] == b.terms[i])) return false;
    return true;
}

namespace {

struct Token {
    enum Kind { Word, Star, Plus, LParen, RParen, Comma, End };
    Kind kind;
    std::string text;
    int line, col;
};

bool word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '/' ||
           c == '-';
}

std::vector<Token> lex(const std::string& text) {
    std::vector<Token> tokens;
    int line = 1, col = 1;
    size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (c == '\n') {
            ++line;
            col = 1;
            ++i;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++col;
            ++i;
            continue;
        }
        int tl = line, tc = col;
        if (word_char(c)) {
            size_t j = i;
            while (j < text.size() && word_char(text[j])) ++j;
            tokens.push_back({Token::Word, text.substr(i, j - i), tl, tc});
            col += int(j - i);
            i = j;
            continue;
        }
        Token::Kind kind;
        switch (c) {
        case '*': kind = Token::Star; break;
        case '+': kind = Token::Plus; break;
        case '(': kind = Token::LParen; break;
        case ')': kind = Token::RParen; break;
        case ',': kind = Token::Comma; break;
        default: throw ParseError(line, col, std::string("unexpected character '") + c + "'");
        }
        tokens.push_back({kind, std::string(1, c), tl, tc});
        ++col;
        ++i;
    }
    tokens.push_back({Token::End, "", line, col});
    return tokens;
}

class Parser {
public:
    explicit Parser(const std::string& text) : tokens_(lex(text)) {}

    ProgramAst parse() {
        ProgramAst ast;
        ast.terms.push_back(parse_term());
        while (peek().kind == Token::Plus) {
            advance();
            ast.terms.push_back(parse_term());
        }
        if (peek().kind != Token::End) fail(peek(), "trailing tokens after program");
        return ast;
    }

private:
    const Token& peek() const { return tokens_[pos_]; }
    const Token& advance() { return tokens_[pos_++]; }

    [[noreturn]] static void fail(const Token& tok, const std::string& msg) {
        throw ParseError(tok.line, tok.col, msg);
    }

    const Token& expect(Token::Kind kind, const char* what) {
        if (peek().kind != kind) fail(peek(), std::string("expected ") + what);
        return advance();
    }

    static bool is_index(const std::string& s) {
        if (s.empty()) return false;
        for (char c : s)
            if (!std::isdigit(static_cast<unsigned char>(c))) return false;
        return true;
    }

    static double parse_weight(const Token& tok) {
        const char* begin = tok.text.c_str();
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end != begin + tok.text.size() || !std::isfinite(v))
            fail(tok, "expected a finite number before '*'");
        return v;
    }

    PointExpr parse_expr() {
        if (peek().kind != Token::Word) fail(peek(), "expected point expression");
        const Token& tok = advance();
        return parse_expr_from(tok);
    }

    PointExpr parse_expr_from(const Token& tok) {
        PointExpr e;
        e.line = tok.line;
        e.col = tok.col;
        if (tok.text == "s") {
            e.kind = PointExpr::Kind::Var;
            return e;
        }
        if (tok.text == "prog") {
            e.kind = PointExpr::Kind::Prog;
            expect(Token::LParen, "'('");
            e.child = std::make_unique<PointExpr>(parse_expr());
            expect(Token::RParen, "')'");
            return e;
        }
        if (tok.text == "proj" || tok.text == "grid") {
            e.kind = tok.text == "proj" ? PointExpr::Kind::Proj : PointExpr::Kind::Grid;
            expect(Token::LParen, "'('");
            while (true) {
                if (peek().kind != Token::Word) fail(peek(), "expected dimension or point expression");
                const Token& w = advance();
                if (is_index(w.text)) {
                    if (w.text.size() > 6) fail(w, "dimension index too large");
                    e.dims.push_back(std::atoi(w.text.c_str()));
                    expect(Token::Comma, "','");
                } else {
                    if (e.dims.empty())
                        fail(w, tok.text + " needs at least one dimension before the expression");
                    e.child = std::make_unique<PointExpr>(parse_expr_from(w));
                    break;
                }
            }
            expect(Token::RParen, "')'");
            for (size_t i = 0; i < e.dims.size(); ++i)
                for (size_t j = i + 1; j < e.dims.size(); ++j)
                    if (e.dims[i] == e.dims[j])
                        fail(tok, "duplicate dimension " + std::to_string(e.dims[i]) + " in " +
                                      tok.text);
            return e;
        }
        fail(tok, "unknown identifier '" + tok.text + "'");
    }

    ProgramTerm parse_term() {
        if (peek().kind != Token::Word) fail(peek(), "expected a loss term");
        const Token& first = advance();
        ProgramTerm term;
        const Token* loss_tok = &first;
        if (peek().kind == Token::Star) {
            term.weight = parse_weight(first);
            advance();
            loss_tok = &expect(Token::Word, "a loss name");
        }
        if (!loss_from_name(loss_tok->text, term.loss))
            fail(*loss_tok, "unknown loss '" + loss_tok->text + "'");
        term.line = loss_tok->line;
        term.col = loss_tok->col;
        expect(Token::LParen, "'('");
        term.expr = parse_expr();
        while (peek().kind == Token::Comma) {
            advance();
            const Token& arg = expect(Token::Word, "an argument");
            term.args.push_back(arg.text);
        }
        expect(Token::RParen, "')'");
        size_t want = takes_file(term.loss) ? 1 : 0;
        if (term.args.size() != want)
            fail(*loss_tok, std::string(loss_name(term.loss)) +
                                (want ? " takes exactly one target argument"
                                      : " takes no arguments"));
        return term;
    }

    std::vector<Token> tokens_;
    size_t pos_ = 0;
};

// Dimension of the expression's output; n < 0 skips range checks.
int check_expr(const PointExpr& e, int n) {
    switch (e.kind) {
    case PointExpr::Kind::Var: return n;
    case PointExpr::Kind::Prog: return check_expr(*e.child, n);
    case PointExpr::Kind::Proj: {
        int s = check_expr(*e.child, n);
        for (int d : e.dims)
            if (s >= 0 && d >= s)
                throw ParseError(e.line, e.col,
                                 "dimension " + std::to_string(d) + " out of range (point dimension " +
                                     std::to_string(s) + ")");
        return int(e.dims.size());
    }
    case PointExpr::Kind::Grid: {
        int s = check_expr(*e.child, n);
        for (int d : e.dims)
            if (s >= 0 && d >= s)
                throw ParseError(e.line, e.col,
                                 "dimension " + std::to_string(d) + " out of range (point dimension " +
                                     std::to_string(s) + ")");
        return s;
    }
    }
    return n;
}

} // namespace

ProgramAst parse_program(const std::string& text, int n) {
    ProgramAst ast = Parser(text).parse();
    for (const auto& term : ast.terms) check_expr(term.expr, n);
    return ast;
}

namespace {

std::string format_weight(double w) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, w);
    return std::string(buf, res.ptr);
}

void print_expr(const PointExpr& e, std::string& out) {
    switch (e.kind) {
    case PointExpr::Kind::Var: out += "s"; return;
    case PointExpr::Kind::Prog:
        out += "prog(";
        print_expr(*e.child, out);
        out += ")";
        return;
    case PointExpr::Kind::Proj:
    case PointExpr::Kind::Grid:
        out += e.kind == PointExpr::Kind::Proj ? "proj(" : "grid(";
        for (int d : e.dims) {
            out += std::to_string(d);
            out += ",";
        }
        print_expr(*e.child, out);
        out += ")";
        return;
    }
}

} // namespace

std::string print_program(const ProgramAst& ast) {
    std::string out;
    for (size_t i = 0; i < ast.terms.size(); ++i) {
        const ProgramTerm& t = ast.terms[i];
        if (i) out += " + ";
        if (t.weight != 1.0) {
            out += format_weight(t.weight);
            out += "*";
        }
        out += loss_name(t.loss);
        out += "(";
        print_expr(t.expr, out);
        for (const auto& a : t.args) {
            out += ",";
            out += a;
        }
        out += ")";
    }
    return out;
}

bool operator==(const IndexRange& a, const IndexRange& b) {
    return a.begin == b.begin && a.count == b.count;
}

std::vector<IndexRange> progressive_ranges(long N, uint64_t seed) {
    if (N < 2) throw UsageError("progressive ranges need at least 2 points");
    std::vector<IndexRange> out;
    out.push_back({0, N});
    long half = N / 2;
    out.push_back({0, half});
    out.push_back({half, N - half});
    std::vector<long> lengths;
    for (long len = 1; len <= N; len <<= 1)
        if (8 * len >= N) lengths.push_back(len);
    Xoshiro256pp rng(seed);
    long len = lengths[rng() % lengths.size()];
    long max_start = N - len;
    long start = max_start > 0 ? long(rng() % uint64_t(max_start + 1)) : 0;
    out.push_back({start, len});
    return out;
}

namespace {

int leaf_dim(const PointExpr& e, int n) { return check_expr(e, n); }

ImageTask checker_image() {
    Eigen::ArrayXXd img(8, 8);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) img(r, c) = double((r + c) % 2);
    return make_image_task(std::move(img));
}


bool is_builtin_spectrum(const std::string& name) {
    return name == "bn" || name == "jitter" || name == "green" || name == "pink";
}

} // namespace

void prepare_targets(const ProgramAst& ast, int n, long N, LossContext& ctx) {
    for (const auto& term : ast.terms) {
        int nl = leaf_dim(term.expr, n);
        switch (term.loss) {
        case LossKind::Bn:
            ctx.spectra.try_emplace("bn", builtin_target("bn"));
            break;
        case LossKind::Spec: {
            const std::string& arg = term.args[0];
            if (ctx.spectra.count(arg)) break;
            if (is_builtin_spectrum(arg))
                ctx.spectra.emplace(arg, builtin_target(arg));
            else if (arg.ends_with(".pgm"))
                ctx.spectra.emplace(arg, read_full_target_pgm(arg));
            else
                ctx.spectra.emplace(arg, read_radial_target_csv(arg));
            break;
        }
        case LossKind::Pcf: {
            const std::string& arg = term.args[0];
            if (ctx.pcfs.count(arg)) break;
            if (arg == "random") {
                double r_max = default_pcf_rmax(nl);
                ctx.pcfs.emplace(arg, measure_target_pcf(sampler_by_name("random"), N, nl,
                                                         ctx.target_trials, 128, r_max,
                                                         r_max / 64.0, kPcfTargetSeed));
            } else {
                ctx.pcfs.emplace(arg, read_pcf_csv(arg));
            }
            break;
        }
        case LossKind::Task: {
            const std::string& arg = term.args[0];
            if (ctx.images.count(arg)) break;
            ctx.images.emplace(arg, arg == "checker" ? checker_image() : load_image_task(arg));
            break;
        }
        case LossKind::Aniso:
        case LossKind::Disc: break;
        }
    }
}

void draw_step_randomness(const ProgramAst& ast, int n, uint64_t step_seed, LossContext& ctx) {
    ctx.draw_seed = step_seed;
    ctx.tasks_by_n.clear();
    for (const auto& term : ast.terms) {
        if (term.loss != LossKind::Disc) continue;
        int nl = leaf_dim(term.expr, n);
        if (ctx.tasks_by_n.count(nl)) continue;
        ctx.tasks_by_n.emplace(
            nl, sample_gaussian_tasks(ctx.disc_count, nl, mix_seed(step_seed, kDiscTaskStream, nl)));
    }
}

namespace {

// Maps the expression's current coordinate space back to root dimensions and
// records the root dims any grid node fixes.
std::vector<int> space_walk(const PointExpr& e, int n, std::vector<char>& fixed) {
    switch (e.kind) {
    case PointExpr::Kind::Var: {
        std::vector<int> m(n);
        for (int d = 0; d < n; ++d) m[d] = d;
        return m;
    }
    case PointExpr::Kind::Prog: return space_walk(*e.child, n, fixed);
    case PointExpr::Kind::Proj: {
        std::vector<int> m = space_walk(*e.child, n, fixed);
        std::vector<int> out;
        out.reserve(e.dims.size());
        for (int d : e.dims) out.push_back(m[size_t(d)]);
        return out;
    }
    case PointExpr::Kind::Grid: {
        std::vector<int> m = space_walk(*e.child, n, fixed);
        for (int d : e.dims) fixed[size_t(m[size_t(d)])] = 1;
        return m;
    }
    }
    return {};
}

} // namespace

std::vector<char> free_dims_mask(const ProgramAst& ast, int n) {
    if (n < 1) throw UsageError("free dimension mask needs n >= 1");
    for (const auto& term : ast.terms) check_expr(term.expr, n);
    std::vector<char> fixed(n, 0);
    for (const auto& term : ast.terms) space_walk(term.expr, n, fixed);
    std::vector<char> free(n);
    bool any = false;
    for (int d = 0; d < n; ++d) {
        free[d] = !fixed[d];
        any = any || free[d];
    }
    if (!any) throw UsageError("program grids every dimension; nothing is free to optimize");
    return free;
}

namespace {

struct Branch {
    std::vector<PointSet> batch;
    double scale = 1.0;
    std::function<void(std::vector<Eigen::MatrixXd>&)> scatter;
};

double dispatch_loss(const ProgramTerm& term, const std::vector<PointSet>& batch,
                     const LossContext& ctx, std::vector<Eigen::MatrixXd>* sub) {
    const long N = batch[0].count();
    const int nl = batch[0].dim();
    const int K = ctx.K > 0 ? ctx.K : default_K(N);
    switch (term.loss) {
    case LossKind::Bn:
    case LossKind::Spec: {
        const std::string key = term.loss == LossKind::Bn ? "bn" : term.args[0];
        auto it = ctx.spectra.find(key);
        if (it == ctx.spectra.end())
            throw UsageError("spectral target '" + key + "' not prepared");
        return spectral_loss(batch, it->second, K, sub);
    }
    case LossKind::Pcf: {
        auto it = ctx.pcfs.find(term.args[0]);
        if (it == ctx.pcfs.end()) throw UsageError("pcf target '" + term.args[0] + "' not prepared");
        const PcfHistogram& target = it->second;
        double want = default_pcf_rmax(nl);
        if (std::abs(target.r_max - want) > 1e-9 * want ||
            std::abs(target.h - want / 64.0) > 1e-9 * want)
            throw UsageError("pcf target '" + term.args[0] +
                             "' uses different estimator settings than this dimension requires");
        return differential_loss(batch, target, sub);
    }
    case LossKind::Aniso: return anisotropy_loss(batch, K, ctx.aniso_bins, sub);
    case LossKind::Disc: {
        auto it = ctx.tasks_by_n.find(nl);
        if (it == ctx.tasks_by_n.end())
            throw UsageError("discrepancy tasks not drawn for dimension " + std::to_string(nl));
        return discrepancy_loss(batch, it->second, sub);
    }
    case LossKind::Task: {
        auto it = ctx.images.find(term.args[0]);
        if (it == ctx.images.end())
            throw UsageError("image target '" + term.args[0] + "' not prepared");
        return task_integral_loss(batch, it->second, sub);
    }
    }
    throw UsageError("unhandled loss kind");
}

} // namespace

double evaluate_program(const ProgramAst& ast, const std::vector<PointSet>& batch,
                        const LossContext& ctx, std::vector<Eigen::MatrixXd>* xbar) {
    if (ast.terms.empty()) throw UsageError("empty program");
    if (batch.empty()) throw UsageError("program evaluation needs a nonempty batch");
    const int n = batch[0].dim();
    const long N = batch[0].count();
    for (const auto& ps : batch)
        if (ps.count() != N || ps.dim() != n)
            throw UsageError("batch items must share count and dimension");
    for (const auto& term : ast.terms) check_expr(term.expr, n);
    if (xbar) {
        xbar->resize(batch.size());
        for (size_t i = 0; i < batch.size(); ++i)
            (*xbar)[i] = Eigen::MatrixXd::Zero(N, n);
    }

    uint64_t prog_counter = 0;
    double total = 0.0;

    std::function<std::vector<Branch>(const PointExpr&)> expand =
        [&](const PointExpr& e) -> std::vector<Branch> {
        switch (e.kind) {
        case PointExpr::Kind::Var: {
            Branch b;
            b.batch = batch;
            if (xbar)
                b.scatter = [xbar](std::vector<Eigen::MatrixXd>& sub) {
                    for (size_t i = 0; i < sub.size(); ++i) (*xbar)[i] += sub[i];
                };
            std::vector<Branch> out;
            out.push_back(std::move(b));
            return out;
        }
        case PointExpr::Kind::Grid: return expand(*e.child);
        case PointExpr::Kind::Proj: {
            std::vector<Branch> parents = expand(*e.child);
            std::vector<Branch> out;
            out.reserve(parents.size());
            for (Branch& p : parents) {
                Branch b;
                b.scale = p.scale;
                b.batch.reserve(p.batch.size());
                for (const PointSet& ps : p.batch) b.batch.push_back(project(ps, e.dims));
                if (xbar) {
                    auto up = p.scatter;
                    long rows = p.batch[0].count();
                    int cols = p.batch[0].dim();
                    std::vector<int> dims = e.dims;
                    b.scatter = [up, rows, cols, dims](std::vector<Eigen::MatrixXd>& sub) {
                        std::vector<Eigen::MatrixXd> full(sub.size());
                        for (size_t i = 0; i < sub.size(); ++i) {
                            full[i] = Eigen::MatrixXd::Zero(rows, cols);
                            for (size_t k = 0; k < dims.size(); ++k)
                                full[i].col(dims[k]) = sub[i].col(long(k));
                        }
                        up(full);
                    };
                }
                out.push_back(std::move(b));
            }
            return out;
        }
        case PointExpr::Kind::Prog: {
            std::vector<Branch> parents = expand(*e.child);
            std::vector<Branch> out;
            for (Branch& p : parents) {
                long Np = p.batch[0].count();
                auto ranges =
                    progressive_ranges(Np, mix_seed(ctx.draw_seed, kProgRangeStream, prog_counter++));
                double scale = p.scale / double(ranges.size());
                for (const IndexRange& r : ranges) {
                    Branch b;
                    b.scale = scale;
                    b.batch.reserve(p.batch.size());
                    for (const PointSet& ps : p.batch)
                        b.batch.push_back(subset_rows(ps, int(r.begin), int(r.count)));
                    if (xbar) {
                        auto up = p.scatter;
                        int cols = p.batch[0].dim();
                        b.scatter = [up, r, Np, cols](std::vector<Eigen::MatrixXd>& sub) {
                            std::vector<Eigen::MatrixXd> full(sub.size());
                            for (size_t i = 0; i < sub.size(); ++i) {
                                full[i] = Eigen::MatrixXd::Zero(Np, cols);
                                full[i].middleRows(r.begin, r.count) = sub[i];
                            }
                            up(full);
                        };
                    }
                    out.push_back(std::move(b));
                }
            }
            return out;
        }
        }
        return {};
    };

    for (const auto& term : ast.terms) {
        std::vector<Branch> branches = expand(term.expr);
        for (Branch& b : branches) {
            std::vector<Eigen::MatrixXd> sub;
            double v = dispatch_loss(term, b.batch, ctx, xbar ? &sub : nullptr);
            total += term.weight * b.scale * v;
            if (xbar) {
                for (auto& m : sub) m *= term.weight * b.scale;
                b.scatter(sub);
            }
        }
    }
    return total;
}

} // namespace samplecraft
