#include "qdiss/tss.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <utility>

#include "qdiss/errors.hpp"
#include "qdiss/parallel.hpp"

namespace qdiss {

std::vector<double> sample_shifts(DisorderTopology topology, std::size_t n_states,
                                  double sigma, GaussianSampler& gauss) {
    std::vector<double> shifts(n_states, 0.0);
    switch (topology) {
        case DisorderTopology::IndependentPerState:
            for (std::size_t a = 0; a < n_states; ++a) shifts[a] = sigma * gauss();
            break;
        case DisorderTopology::AntiCorrelated: {
            if (n_states != 2)
                throw ConfigError("anti-correlated disorder is defined for two states");
            const double d = sigma * gauss();
            shifts[0] = d;
            shifts[1] = -d;
            break;
        }
    }
    return shifts;
}

namespace {

// Merges per-block partial sums strictly in block order, holding out-of-order
// deposits until their turn. In-flight storage stays bounded by the worker
// count because workers claim blocks in order.
class OrderedReducer {
public:
    OrderedReducer(std::size_t payload_size, std::size_t se_size)
        : sum_(payload_size, 0.0), sumsq_(se_size, 0.0) {}

    void deposit(std::size_t block, std::vector<double> sum, std::vector<double> sumsq) {
        std::lock_guard<std::mutex> lock(mu_);
        pending_.emplace(block, std::make_pair(std::move(sum), std::move(sumsq)));
        for (auto it = pending_.begin(); it != pending_.end() && it->first == next_;
             it = pending_.begin()) {
            const auto& s = it->second.first;
            const auto& s2 = it->second.second;
            for (std::size_t i = 0; i < sum_.size(); ++i) sum_[i] += s[i];
            for (std::size_t i = 0; i < sumsq_.size(); ++i) sumsq_[i] += s2[i];
            pending_.erase(it);
            ++next_;
        }
    }

    const std::vector<double>& sum() const { return sum_; }
    const std::vector<double>& sumsq() const { return sumsq_; }

private:
    std::mutex mu_;
    std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>> pending_;
    std::size_t next_ = 0;
    std::vector<double> sum_;
    std::vector<double> sumsq_;
};

}  // namespace

EnsembleResult run_ensemble(
    std::size_t n_traj, std::size_t payload_size, std::size_t se_offset,
    std::size_t se_size, std::uint64_t seed, int workers,
    const std::function<void(std::size_t, GaussianSampler&, std::vector<double>&)>& fill) {
    if (n_traj == 0) throw ConfigError("ensemble needs at least one trajectory");
    if (se_offset + se_size > payload_size)
        throw ConfigError("tracked payload segment exceeds the payload");

    OrderedReducer reducer(payload_size, se_size);

    run_blocks(n_traj, kEnsembleBlock, resolve_workers(workers), [&](const BlockRange& r) {
        std::vector<double> payload(payload_size, 0.0);
        std::vector<double> sum(payload_size, 0.0);
        std::vector<double> sumsq(se_size, 0.0);
        for (std::size_t traj = r.lo; traj < r.hi; ++traj) {
            GaussianSampler gauss(trajectory_stream(seed, traj));
            fill(traj, gauss, payload);
            for (std::size_t i = 0; i < payload_size; ++i) sum[i] += payload[i];
            for (std::size_t i = 0; i < se_size; ++i) {
                const double v = payload[se_offset + i];
                sumsq[i] += v * v;
            }
        }
        reducer.deposit(r.block, std::move(sum), std::move(sumsq));
    });

    EnsembleResult out;
    out.n = n_traj;
    const double inv_n = 1.0 / static_cast<double>(n_traj);
    out.mean.resize(payload_size);
    for (std::size_t i = 0; i < payload_size; ++i) out.mean[i] = reducer.sum()[i] * inv_n;
    out.stderr_of_mean.assign(se_size, 0.0);
    if (n_traj > 1) {
        for (std::size_t i = 0; i < se_size; ++i) {
            const double m = out.mean[se_offset + i];
            double var = (reducer.sumsq()[i] - static_cast<double>(n_traj) * m * m)
                         / static_cast<double>(n_traj - 1);
            if (var < 0.0) var = 0.0;  // cancellation guard for near-constant payloads
            out.stderr_of_mean[i] = std::sqrt(var * inv_n);
        }
    }
    return out;
}

}  // namespace qdiss
