#pragma once

#include "samplecraft/diff.hpp"
#include "samplecraft/io.hpp"
#include "samplecraft/samplers.hpp"

namespace samplecraft {

struct TrainConfig {
    std::string program = "bn(s)";
    int n = 2;
    long N = 256;
    int n_s = 30;       // filter iterations
    int m = 20;         // RBFs per iteration
    double sigma = 0.4; // receptive field radius
    double sigma_n = 0.04;
    double gamma = 1.0;
    int batch = 4;
    long batches = 10000;
    std::string init = "random";
    double lr0 = 1e-6;
    double decay = 0.95;
    uint64_t seed = 0;
    int K = 0; // spectral lattice extent; 0 = default per point count
};

struct AdamState {
    long t = 0;
    Eigen::MatrixXd m, v; // first and second moments, lazily sized
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

// Standard bias-corrected ADAM update, in place.
void adam_step(Eigen::MatrixXd& theta, const Eigen::MatrixXd& grad, AdamState& state, double lr);

// lr0 * decay^(step/1000), continuous exponent.
double lr_schedule(long step, double lr0, double decay);

// Seed streams of the training loop, published for external reproduction:
// step s draws its randomness with mix_seed(seed, kStepSeedStream, s) and
// batch item b of step s is initialized with mix_seed(seed, s, b).
inline constexpr uint64_t kStepSeedStream = 0x57E9ull;

struct TrainResult {
    FilterStack stack;
    std::vector<LossRecord> history;
    bool diverged = false;
    long diverged_at = -1; // step whose loss went non-finite
};

// Full training loop: fresh seeded batches every step, forward through the
// stack, program evaluation, backprop, ADAM. Deterministic given cfg. On
// divergence the last stack with a finite loss is returned.
TrainResult train(const TrainConfig& cfg);

// Checkpoint metadata persisted alongside the stack.
struct CheckpointMeta {
    long train_N = 0;
    std::string program;
    uint64_t seed = 0;
    long batch_index = 0;
};

// Versioned JSON with fixed field order and 17-significant-digit numbers;
// save/load round-trips bit-exactly.
void save_checkpoint(const std::string& path, const FilterStack& stack,
                     const CheckpointMeta& meta);
FilterStack load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr);

} // namespace samplecraft
