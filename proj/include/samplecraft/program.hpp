#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "samplecraft/losses.hpp"
#include "samplecraft/pointset.hpp"

namespace samplecraft {

// Sample-program AST. A program is a weighted sum of loss terms, each
// applied to a point expression built from the free variable s and the
// operators proj (coordinate selection), prog (progressive subsets), and
// grid (mark dimensions as fixed).
enum class LossKind { Bn, Spec, Pcf, Aniso, Disc, Task };

const char* loss_name(LossKind kind);

struct PointExpr {
    enum class Kind { Var, Proj, Prog, Grid };
    Kind kind = Kind::Var;
    std::vector<int> dims; // Proj and Grid
    std::unique_ptr<PointExpr> child;
    int line = 0, col = 0; // source location of the keyword

    PointExpr clone() const;
};

// Structural equality; source locations are ignored.
bool operator==(const PointExpr& a, const PointExpr& b);
inline bool operator!=(const PointExpr& a, const PointExpr& b) { return !(a == b); }

struct ProgramTerm {
    double weight = 1.0;
    LossKind loss = LossKind::Bn;
    PointExpr expr;
    std::vector<std::string> args; // target file or builtin name where applicable
    int line = 0, col = 0;

    ProgramTerm clone() const;
};

bool operator==(const ProgramTerm& a, const ProgramTerm& b);
inline bool operator!=(const ProgramTerm& a, const ProgramTerm& b) { return !(a == b); }

struct ProgramAst {
    std::vector<ProgramTerm> terms;

    ProgramAst clone() const;
};

bool operator==(const ProgramAst& a, const ProgramAst& b);
inline bool operator!=(const ProgramAst& a, const ProgramAst& b) { return !(a == b); }

// Parses program text. When n >= 0, dimension indices are range-checked
// against the point dimension as transformed by the expression tree.
// Malformed input throws ParseError with a 1-based line:column location.
ProgramAst parse_program(const std::string& text, int n = -1);

// Canonical text form; parse_program(print_program(ast)) == ast.
// Weight 1 is omitted.
std::string print_program(const ProgramAst& ast);

// Contiguous index ranges for progressive evaluation: the full range, both
// halves, and one seeded random range whose length is a power of two >= N/8.
struct IndexRange {
    long begin = 0;
    long count = 0;
};

bool operator==(const IndexRange& a, const IndexRange& b);

std::vector<IndexRange> progressive_ranges(long N, uint64_t seed);

// Seed streams, published so training steps are reproducible from outside:
// the i-th prog() term draws ranges with mix_seed(draw_seed, kProgRangeStream, i),
// disc tasks for leaf dimension d use mix_seed(step_seed, kDiscTaskStream, d),
// and the builtin "random" pcf target is measured with kPcfTargetSeed.
inline constexpr uint64_t kProgRangeStream = 0x505247ull;
inline constexpr uint64_t kDiscTaskStream = 0xD15Cull;
inline constexpr uint64_t kPcfTargetSeed = 0x7A26E7ull;

// Everything a program evaluation reads besides the points: loaded targets,
// per-step random draws, and loss settings. Draws are immutable within a
// step so forward, backward, and finite-difference probes agree.
struct LossContext {
    int K = 0; // lattice extent; 0 picks default_K per evaluated subset
    int aniso_bins = 16;
    int disc_count = 64;
    int target_trials = 16; // realizations when measuring builtin pcf targets
    uint64_t draw_seed = 0;
    std::map<std::string, TargetSpectrum> spectra;
    std::map<std::string, PcfHistogram> pcfs;
    std::map<std::string, ImageTask> images;
    std::map<int, std::vector<GaussianTask>> tasks_by_n;
};

// Loads or synthesizes every target the program references, keyed by the
// argument text. Builtin names: spectra bn/jitter/green/pink, pcf target
// "random" (measured from the random sampler at the training N), image
// "checker" (8x8 checkerboard). Anything else is read from disk.
void prepare_targets(const ProgramAst& ast, int n, long N, LossContext& ctx);

// Draws the per-step randomness: discrepancy task sets for every dimension
// a disc term sees, and the seed progressive ranges derive from.
void draw_step_randomness(const ProgramAst& ast, int n, uint64_t step_seed, LossContext& ctx);

// Free-dimension mask induced by grid terms: false where any term fixes the
// dimension. Throws if the program grids every dimension.
std::vector<char> free_dims_mask(const ProgramAst& ast, int n);

// Evaluates the program on a batch. With xbar non-null also accumulates
// d(loss)/d(coords) per batch item.
double evaluate_program(const ProgramAst& ast, const std::vector<PointSet>& batch,
                        const LossContext& ctx, std::vector<Eigen::MatrixXd>* xbar = nullptr);

} // namespace samplecraft
