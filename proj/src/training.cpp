#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "samplecraft/training.hpp"

namespace samplecraft {

void adam_step(Eigen::MatrixXd& theta, const Eigen::MatrixXd& grad, AdamState& state, double lr) {
    if (grad.rows() != theta.rows() || grad.cols() != theta.cols())
        throw UsageError("adam gradient shape does not match parameters");
    if (!grad.allFinite()) throw NumericError("non-finite gradient in adam step");
    if (state.m.size() == 0) {
        state.m = Eigen::MatrixXd::Zero(theta.rows(), theta.cols());
        state.v = Eigen::MatrixXd::Zero(theta.rows(), theta.cols());
    }
    state.t += 1;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
    state.v = state.beta2 * state.v.array().matrix() +
              (1.0 - state.beta2) * grad.array().square().matrix();
    double c1 = 1.0 - std::pow(state.beta1, double(state.t));
    double c2 = 1.0 - std::pow(state.beta2, double(state.t));
    theta.array() -=
        lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + state.eps);
}

double lr_schedule(long step, double lr0, double decay) {
    if (step < 0) throw UsageError("learning-rate schedule step must be nonnegative");
    return lr0 * std::pow(decay, double(step) / 1000.0);
}

namespace {

void check_config(const TrainConfig& cfg) {
    if (cfg.n < 1) throw UsageError("training dimension must be positive");
    if (cfg.N < 1) throw UsageError("training point count must be positive");
    if (cfg.n_s < 1 || cfg.m < 1) throw UsageError("filter sizes must be positive");
    if (cfg.batch < 1) throw UsageError("batch size must be positive");
    if (cfg.batches < 0) throw UsageError("batch count must be nonnegative");
    if (!(cfg.lr0 > 0.0)) throw UsageError("learning rate must be positive");
    if (!(cfg.decay > 0.0) || cfg.decay > 1.0) throw UsageError("decay must be in (0, 1]");
}

} // namespace

TrainResult train(const TrainConfig& cfg) {
    check_config(cfg);
    ProgramAst ast = parse_program(cfg.program, cfg.n);

    TrainResult result;
    result.stack = make_filter_stack(cfg.m, cfg.n, cfg.n_s, cfg.sigma, cfg.sigma_n, cfg.gamma);
    result.stack.free_dims = free_dims_mask(ast, cfg.n);

    LossContext ctx;
    ctx.K = cfg.K;
    prepare_targets(ast, cfg.n, cfg.N, ctx);
    SamplerFn init = sampler_by_name(cfg.init);

    AdamState adam;
    Eigen::MatrixXd grad;
    Eigen::MatrixXd last_good = result.stack.theta;
    result.history.reserve(size_t(cfg.batches));

    for (long step = 0; step < cfg.batches; ++step) {
        draw_step_randomness(ast, cfg.n, mix_seed(cfg.seed, kStepSeedStream, uint64_t(step)), ctx);
        std::vector<PointSet> batch;
        batch.reserve(size_t(cfg.batch));
        for (int b = 0; b < cfg.batch; ++b)
            batch.push_back(init(cfg.N, cfg.n, mix_seed(cfg.seed, uint64_t(step), uint64_t(b))));

        double lr = lr_schedule(step, cfg.lr0, cfg.decay);
        double loss;
        try {
            loss = backprop_stack(batch, result.stack, ast, ctx, grad);
        } catch (const NumericError&) {
            result.stack.theta = last_good;
            result.diverged = true;
            result.diverged_at = step;
            break;
        }
        result.history.push_back({step, loss, lr});
        last_good = result.stack.theta;
        adam_step(result.stack.theta, grad, adam, lr);
    }
    return result;
}

namespace {

void json_escape(const std::string& s, std::string& out) {
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\t': out += "\\t"; break;
        default:
            if (static_cast<unsigned char>(c) < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof buf, "\\u%04x", c);
                out += buf;
            } else {
                out += c;
            }
        }
    }
}

void append_matrix(const Eigen::MatrixXd& m, std::string& out) {
    out += "[";
    for (long r = 0; r < m.rows(); ++r) {
        if (r) out += ", ";
        out += "[";
        for (long c = 0; c < m.cols(); ++c) {
            if (c) out += ", ";
            out += format_double(m(r, c));
        }
        out += "]";
    }
    out += "]";
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, long rows, long cols,
                                 const char* name) {
    if (!j.is_array() || long(j.size()) != rows)
        throw IoError(std::string("checkpoint field '") + name + "' has the wrong shape");
    Eigen::MatrixXd m(rows, cols);
    for (long r = 0; r < rows; ++r) {
        const auto& row = j[size_t(r)];
        if (!row.is_array() || long(row.size()) != cols)
            throw IoError(std::string("checkpoint field '") + name + "' has the wrong shape");
        for (long c = 0; c < cols; ++c) {
            const auto& v = row[size_t(c)];
            if (!v.is_number()) throw IoError(std::string("checkpoint field '") + name +
                                              "' holds a non-numeric entry");
            m(r, c) = v.get<double>();
        }
    }
    return m;
}

constexpr int kCheckpointVersion = 1;

} // namespace

void save_checkpoint(const std::string& path, const FilterStack& stack,
                     const CheckpointMeta& meta) {
    std::string j;
    j += "{\n";
    j += "  \"version\": " + std::to_string(kCheckpointVersion) + ",\n";
    j += "  \"n\": " + std::to_string(stack.dim()) + ",\n";
    j += "  \"free_dims\": [";
    for (int d = 0; d < stack.dim(); ++d)
        j += std::string(d ? ", " : "") + (stack.free_dims[d] ? "true" : "false");
    j += "],\n";
    j += "  \"m\": " + std::to_string(stack.basis.m) + ",\n";
    j += "  \"n_s\": " + std::to_string(stack.n_s) + ",\n";
    j += "  \"sigma\": " + format_double(stack.basis.sigma) + ",\n";
    j += "  \"sigma_n\": " + format_double(stack.basis.sigma_n) + ",\n";
    j += "  \"gamma\": " + format_double(stack.gamma) + ",\n";
    j += "  \"mu\": ";
    append_matrix(stack.basis.means, j);
    j += ",\n";
    j += "  \"theta\": ";
    append_matrix(stack.theta, j);
    j += ",\n";
    j += "  \"train_N\": " + std::to_string(meta.train_N) + ",\n";
    j += "  \"program\": \"";
    json_escape(meta.program, j);
    j += "\",\n";
    j += "  \"seed\": " + std::to_string(meta.seed) + ",\n";
    j += "  \"batch_index\": " + std::to_string(meta.batch_index) + "\n";
    j += "}\n";

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << j;
    if (!f) throw IoError("failed writing checkpoint '" + path + "'");
}

FilterStack load_checkpoint(const std::string& path, CheckpointMeta* meta) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for reading");
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw IoError("malformed checkpoint '" + path + "': " + e.what());
    }
    auto need = [&](const char* key) -> const nlohmann::json& {
        auto it = j.find(key);
        if (it == j.end())
            throw IoError("checkpoint '" + path + "' is missing field '" + key + "'");
        return *it;
    };
    if (need("version").get<int>() != kCheckpointVersion)
        throw IoError("checkpoint '" + path + "' has unsupported version " +
                      need("version").dump());

    FilterStack stack;
    int n = need("n").get<int>();
    stack.basis.m = need("m").get<int>();
    stack.basis.dim = n;
    stack.n_s = need("n_s").get<int>();
    stack.basis.sigma = need("sigma").get<double>();
    stack.basis.sigma_n = need("sigma_n").get<double>();
    stack.gamma = need("gamma").get<double>();
    if (n < 1 || stack.basis.m < 1 || stack.n_s < 1)
        throw IoError("checkpoint '" + path + "' has invalid sizes");
    stack.basis.means = matrix_from_json(need("mu"), stack.basis.m, n, "mu");
    stack.theta = matrix_from_json(need("theta"), stack.n_s, stack.basis.m, "theta");
    const auto& fd = need("free_dims");
    if (!fd.is_array() || int(fd.size()) != n)
        throw IoError("checkpoint field 'free_dims' has the wrong shape");
    stack.free_dims.resize(size_t(n));
    for (int d = 0; d < n; ++d) {
        if (!fd[size_t(d)].is_boolean())
            throw IoError("checkpoint field 'free_dims' holds a non-boolean entry");
        stack.free_dims[d] = fd[size_t(d)].get<bool>();
    }
    if (meta) {
        meta->train_N = need("train_N").get<long>();
        meta->program = need("program").get<std::string>();
        meta->seed = need("seed").get<uint64_t>();
        meta->batch_index = need("batch_index").get<long>();
    }
    return stack;
}

} // namespace samplecraft
