#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "motionwalk/group.hpp"
#include "motionwalk/rng.hpp"
#include "motionwalk/step_laws.hpp"

namespace motionwalk {

/// Full description of one ensemble run of the walk
///   S_n = T_1 + R_1(T_2) + ... + R_1...R_{n-1}(T_n),
/// with T_1 entering unrotated (R_0 = 1).
struct WalkConfig {
    std::size_t d;
    TranslationLaw translation;
    RotationLaw rotation;
    std::uint64_t n_steps;
    std::vector<std::uint64_t> checkpoints;  // sorted, within [1, n_steps]
    std::uint64_t ensemble_size;
    std::uint64_t master_seed;
    std::vector<Character> characters;  // prefix characters tracked per checkpoint
    bool record_positions = false;      // keep per-walker positions at checkpoints

    void validate() const {
        if (d < 1) throw std::invalid_argument("WalkConfig: d must be >= 1");
        if (translation.dim() != d) throw std::invalid_argument("WalkConfig: translation law dimension mismatch");
        if (rotation.ambient_dim() != d) throw std::invalid_argument("WalkConfig: rotation law dimension mismatch");
        if (n_steps < 1) throw std::invalid_argument("WalkConfig: n_steps must be >= 1");
        if (ensemble_size < 1) throw std::invalid_argument("WalkConfig: ensemble size must be >= 1");
        for (std::size_t c = 0; c < checkpoints.size(); ++c) {
            if (checkpoints[c] < 1 || checkpoints[c] > n_steps)
                throw std::invalid_argument("WalkConfig: checkpoint outside [1, n_steps]");
            if (c > 0 && checkpoints[c] <= checkpoints[c - 1])
                throw std::invalid_argument("WalkConfig: checkpoints must be strictly increasing");
        }
        for (const Character& chi : characters)
            if (chi.indices.size() != d / 2)
                throw std::invalid_argument("WalkConfig: character incompatible with the torus");
    }
};

/// Default checkpoint grid: n = 10^k and 2*10^k up to n_steps, plus n_steps
/// itself, so log-log asymptotics come out evenly spaced.
inline std::vector<std::uint64_t> geometric_checkpoints(std::uint64_t n_steps) {
    std::vector<std::uint64_t> cps;
    for (std::uint64_t base = 1; base <= n_steps && base != 0; base *= 10) {
        cps.push_back(base);
        if (2 * base <= n_steps) cps.push_back(2 * base);
    }
    if (cps.empty() || cps.back() != n_steps) cps.push_back(n_steps);
    return cps;
}

/// One walker's trajectory, sampled at the configured checkpoints.
/// x_increments holds X_c = R_1...R_{c-1}(T_c), the term added at step c.
struct TrajectoryRecord {
    std::uint64_t walker_id = 0;
    std::vector<std::uint64_t> checkpoints;
    std::vector<std::vector<double>> positions;
    std::vector<TorusRotation> prefixes;
    std::vector<std::vector<double>> x_increments;
};

namespace detail {

/// Step-law tables precomputed along the shared dynamical-system clock:
/// the orbit (and hence every per-step probability row) is identical for
/// all walkers, so profile evaluation leaves the per-walker inner loop.
struct CompiledLaws {
    std::size_t d = 0;
    std::size_t r = 0;
    std::uint64_t n_steps = 0;
    bool identity_rotation = true;
    std::size_t n_outcomes = 0;
    std::vector<double> t_cum;            // n_steps x 2d running sums
    std::vector<std::uint32_t> t_last;    // last positive cell per step
    std::vector<double> r_cum;            // n_steps x n_outcomes running sums
    std::vector<std::uint32_t> r_last;
    std::vector<double> outcome_turns;    // n_outcomes x r block-angle turns

    CompiledLaws(const TranslationLaw& translation, const RotationLaw& rotation,
                 std::uint64_t steps)
        : d(translation.dim()), r(translation.dim() / 2), n_steps(steps) {
        identity_rotation = rotation.is_identity_law();
        const std::size_t tw = 2 * d;
        t_cum.resize(n_steps * tw);
        t_last.resize(n_steps);
        for (std::uint64_t i = 1; i <= n_steps; ++i) {
            const double x = translation.dynamics().iterate(i);
            double run = 0.0;
            std::uint32_t last = 0;
            for (std::size_t j = 0; j < d; ++j) {
                const double up = translation.profiles()[j].eval(x);
                const double down = 1.0 / static_cast<double>(d) - up;
                if (up > 0.0) last = static_cast<std::uint32_t>(2 * j);
                run += up;
                t_cum[(i - 1) * tw + 2 * j] = run;
                if (down > 0.0) last = static_cast<std::uint32_t>(2 * j + 1);
                run += down;
                t_cum[(i - 1) * tw + 2 * j + 1] = run;
            }
            t_last[i - 1] = last;
        }
        if (!identity_rotation) {
            n_outcomes = rotation.outcomes().size();
            outcome_turns.resize(n_outcomes * r);
            for (std::size_t o = 0; o < n_outcomes; ++o)
                for (std::size_t b = 0; b < r; ++b)
                    outcome_turns[o * r + b] = rotation.outcomes()[o].block_angle(b).turns();
            r_cum.resize(n_steps * n_outcomes);
            r_last.resize(n_steps);
            for (std::uint64_t i = 1; i <= n_steps; ++i) {
                const std::vector<double> probs = rotation.probabilities(i);
                double run = 0.0;
                std::uint32_t last = 0;
                for (std::size_t o = 0; o < n_outcomes; ++o) {
                    if (probs[o] > 0.0) last = static_cast<std::uint32_t>(o);
                    run += probs[o];
                    r_cum[(i - 1) * n_outcomes + o] = run;
                }
                r_last[i - 1] = last;
            }
        }
    }
};

/// Draws for one walker from its private counter-based stream; cell
/// selection reproduces sample_translation / sample_rotation bit for bit.
struct LawDraws {
    const CompiledLaws* laws;
    RngStream stream;

    std::uint32_t translation_cell(std::uint64_t i) const {
        const double u = stream.uniform(translation_counter(i));
        const std::size_t tw = 2 * laws->d;
        const double* row = laws->t_cum.data() + (i - 1) * tw;
        for (std::size_t k = 0; k < tw; ++k)
            if (u < row[k]) return static_cast<std::uint32_t>(k);
        return laws->t_last[i - 1];
    }

    const double* rotation_turns(std::uint64_t i) const {
        if (laws->identity_rotation) return nullptr;
        const double u = stream.uniform(rotation_counter(i));
        const double* row = laws->r_cum.data() + (i - 1) * laws->n_outcomes;
        std::size_t cell = laws->r_last[i - 1];
        for (std::size_t o = 0; o < laws->n_outcomes; ++o)
            if (u < row[o]) {
                cell = o;
                break;
            }
        return laws->outcome_turns.data() + cell * laws->r;
    }
};

/// Forced draw sequences for fold-equivalence tests: the same kernel runs,
/// only the source of (T_i, R_i) changes.
struct ForcedDraws {
    const std::vector<std::uint32_t>* cells;         // per step: 2j (+e_j) or 2j+1 (-e_j)
    const std::vector<std::vector<double>>* turns;   // per step: r block-angle turns

    std::uint32_t translation_cell(std::uint64_t i) const { return (*cells)[i - 1]; }
    const double* rotation_turns(std::uint64_t i) const {
        if (turns == nullptr) return nullptr;
        return (*turns)[i - 1].data();
    }
};

/// The walk recurrence. Buffers are caller-owned, flat, one row per
/// checkpoint: pos_out (d), prefix_out (r turn values), x_out (d).
template <class Draws>
void walk_kernel(std::size_t d, std::uint64_t n_steps,
                 const std::vector<std::uint64_t>& checkpoints, const Draws& draws,
                 double* pos_out, double* prefix_out, double* x_out) {
    const std::size_t r = d / 2;
    std::vector<double> pos(d, 0.0);
    std::vector<double> prefix(r, 0.0);
    std::size_t cp = 0;
    for (std::uint64_t i = 1; i <= n_steps && cp < checkpoints.size(); ++i) {
        const std::uint32_t cell = draws.translation_cell(i);
        const std::uint32_t axis = cell >> 1;
        const double sign = (cell & 1U) ? -1.0 : 1.0;
        double dx_a = sign, dx_b = 0.0;  // increment components on the axis' block
        std::uint32_t row_a = axis, row_b = axis;
        if (axis < 2 * r) {
            const std::uint32_t blk = axis >> 1;
            const double t = prefix[blk];
            double c = 1.0, s = 0.0;
            if (t != 0.0) {
                c = std::cos(two_pi * t);
                s = std::sin(two_pi * t);
            }
            row_a = 2 * blk;
            row_b = 2 * blk + 1;
            if ((axis & 1U) == 0) {
                dx_a = sign * c;
                dx_b = sign * s;
            } else {
                dx_a = -sign * s;
                dx_b = sign * c;
            }
            pos[row_a] += dx_a;
            pos[row_b] += dx_b;
        } else {
            if (axis >= d) throw std::out_of_range("walk_kernel: translation cell out of range");
            pos[axis] += sign;  // trailing fixed axis of odd d
        }
        const double* rot = draws.rotation_turns(i);
        if (rot != nullptr)
            for (std::size_t b = 0; b < r; ++b) prefix[b] = frac(prefix[b] + rot[b]);
        if (i == checkpoints[cp]) {
            double* prow = pos_out + cp * d;
            for (std::size_t k = 0; k < d; ++k) prow[k] = pos[k];
            double* frow = prefix_out + cp * r;
            for (std::size_t b = 0; b < r; ++b) frow[b] = prefix[b];
            double* xrow = x_out + cp * d;
            for (std::size_t k = 0; k < d; ++k) xrow[k] = 0.0;
            xrow[row_a] = dx_a;
            if (row_b != row_a) xrow[row_b] = dx_b;
            ++cp;
        }
    }
}

inline TrajectoryRecord make_record(std::uint64_t walker_id, std::size_t d,
                                    const std::vector<std::uint64_t>& checkpoints,
                                    const std::vector<double>& pos,
                                    const std::vector<double>& prefix,
                                    const std::vector<double>& x) {
    const std::size_t r = d / 2;
    TrajectoryRecord rec;
    rec.walker_id = walker_id;
    rec.checkpoints = checkpoints;
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
        rec.positions.emplace_back(pos.begin() + c * d, pos.begin() + (c + 1) * d);
        std::vector<Angle> angles(r);
        for (std::size_t b = 0; b < r; ++b) angles[b] = Angle(prefix[c * r + b]);
        rec.prefixes.emplace_back(d, std::move(angles));
        rec.x_increments.emplace_back(x.begin() + c * d, x.begin() + (c + 1) * d);
    }
    return rec;
}

}  // namespace detail

/// One trajectory; walker_id selects the private random stream
/// (master_seed, walker_id), so the record is reproducible in isolation.
inline TrajectoryRecord run_walk(const WalkConfig& config, std::uint64_t walker_id) {
    config.validate();
    const detail::CompiledLaws laws(config.translation, config.rotation, config.n_steps);
    const detail::LawDraws draws{&laws, RngStream(config.master_seed, walker_id)};
    const std::size_t C = config.checkpoints.size();
    std::vector<double> pos(C * config.d), prefix(C * (config.d / 2)), x(C * config.d);
    detail::walk_kernel(config.d, config.n_steps, config.checkpoints, draws, pos.data(),
                        prefix.data(), x.data());
    return detail::make_record(walker_id, config.d, config.checkpoints, pos, prefix, x);
}

/// Same recurrence driven by an explicit draw sequence instead of the laws;
/// used to check the walk against product_chain term by term.
inline TrajectoryRecord run_walk_forced(std::size_t d, std::uint64_t n_steps,
                                        const std::vector<std::uint64_t>& checkpoints,
                                        const std::vector<std::uint32_t>& translation_cells,
                                        const std::vector<TorusRotation>& rotations) {
    const std::size_t r = d / 2;
    if (translation_cells.size() < n_steps)
        throw std::invalid_argument("run_walk_forced: not enough translation draws");
    for (std::uint32_t cell : translation_cells)
        if (cell >= 2 * d) throw std::invalid_argument("run_walk_forced: cell index out of range");
    std::vector<std::vector<double>> turns;
    const std::vector<std::vector<double>>* turns_ptr = nullptr;
    if (!rotations.empty()) {
        if (rotations.size() < n_steps)
            throw std::invalid_argument("run_walk_forced: not enough rotation draws");
        for (const TorusRotation& rot : rotations) {
            std::vector<double> row(r);
            for (std::size_t b = 0; b < r; ++b) row[b] = rot.block_angle(b).turns();
            turns.push_back(std::move(row));
        }
        turns_ptr = &turns;
    }
    const detail::ForcedDraws draws{&translation_cells, turns_ptr};
    const std::size_t C = checkpoints.size();
    std::vector<double> pos(C * d), prefix(C * r), x(C * d);
    detail::walk_kernel(d, n_steps, checkpoints, draws, pos.data(), prefix.data(), x.data());
    return detail::make_record(0, d, checkpoints, pos, prefix, x);
}

/// Per-checkpoint aggregates over the ensemble. Sums are accumulated in a
/// fixed walker/block order, so results are independent of the worker count.
struct CheckpointSummary {
    std::uint64_t step = 0;
    std::vector<double> mean;                             // of S_n
    SquareMatrix covariance;                              // of S_n / sqrt(n)
    std::vector<std::complex<double>> character_moments;  // of the rotation prefix
    std::uint64_t return_count = 0;
    double return_frequency = 0.0;  // meaningful for lattice-valued walks only
    std::vector<double> x_mean;     // of X_n at the checkpoint step
    double x_second_moment = 0.0;   // of ||X_n||^2 (identically 1 for unit steps)
    double x_variance = 0.0;        // E||X - EX||^2 estimate
};

struct EnsembleSummary {
    std::uint64_t walkers = 0;
    bool lattice_valued = false;
    std::vector<Character> characters;
    std::vector<CheckpointSummary> checkpoints;
    // Per-walker positions at each checkpoint (row-major, walkers x d),
    // populated only when WalkConfig::record_positions is set.
    std::vector<std::vector<double>> positions;
};

namespace detail {

struct BlockPartial {
    // per checkpoint: sum_S (d), sum_outer (d*d), char sums (2 per character),
    // x sums (d), x norm-square sum, return count
    std::vector<double> sum_s;
    std::vector<double> sum_outer;
    std::vector<double> char_re;
    std::vector<double> char_im;
    std::vector<double> sum_x;
    std::vector<double> sum_x2;
    std::vector<std::uint64_t> returns;

    BlockPartial(std::size_t C, std::size_t d, std::size_t nchar)
        : sum_s(C * d, 0.0),
          sum_outer(C * d * d, 0.0),
          char_re(C * nchar, 0.0),
          char_im(C * nchar, 0.0),
          sum_x(C * d, 0.0),
          sum_x2(C, 0.0),
          returns(C, 0) {}

    void merge(const BlockPartial& other) {
        for (std::size_t k = 0; k < sum_s.size(); ++k) sum_s[k] += other.sum_s[k];
        for (std::size_t k = 0; k < sum_outer.size(); ++k) sum_outer[k] += other.sum_outer[k];
        for (std::size_t k = 0; k < char_re.size(); ++k) char_re[k] += other.char_re[k];
        for (std::size_t k = 0; k < char_im.size(); ++k) char_im[k] += other.char_im[k];
        for (std::size_t k = 0; k < sum_x.size(); ++k) sum_x[k] += other.sum_x[k];
        for (std::size_t k = 0; k < sum_x2.size(); ++k) sum_x2[k] += other.sum_x2[k];
        for (std::size_t k = 0; k < returns.size(); ++k) returns[k] += other.returns[k];
    }
};

}  // namespace detail

/// Monte Carlo ensemble: M independent walkers on disjoint random streams,
/// sharded into fixed-size blocks. Each block is accumulated sequentially in
/// walker order and blocks are merged in index order, so the aggregate is
/// bit-identical for any number of threads.
inline EnsembleSummary run_ensemble(const WalkConfig& config, unsigned n_threads = 0) {
    config.validate();
    const std::size_t d = config.d;
    const std::size_t r = d / 2;
    const std::size_t C = config.checkpoints.size();
    const std::size_t nchar = config.characters.size();
    const std::uint64_t M = config.ensemble_size;

    const detail::CompiledLaws laws(config.translation, config.rotation, config.n_steps);

    // Block layout depends only on M; never on the thread count.
    const std::uint64_t block_size = std::clamp<std::uint64_t>((M + 255) / 256, 1, 8192);
    const std::uint64_t n_blocks = (M + block_size - 1) / block_size;

    std::vector<detail::BlockPartial> partials(n_blocks, detail::BlockPartial(C, d, nchar));

    EnsembleSummary summary;
    summary.walkers = M;
    summary.lattice_valued = config.rotation.is_identity_law();
    summary.characters = config.characters;
    if (config.record_positions)
        summary.positions.assign(C, std::vector<double>(M * d, 0.0));

    std::atomic<std::uint64_t> next_block{0};
    std::atomic<bool> failed{false};
    std::vector<std::string> block_errors(n_blocks);

    auto run_block = [&](std::uint64_t blk, std::vector<double>& pos, std::vector<double>& prefix,
                         std::vector<double>& x) {
        detail::BlockPartial& part = partials[blk];
        const std::uint64_t w_begin = blk * block_size;
        const std::uint64_t w_end = std::min<std::uint64_t>(M, w_begin + block_size);
        for (std::uint64_t w = w_begin; w < w_end; ++w) {
            try {
                const detail::LawDraws draws{&laws, RngStream(config.master_seed, w)};
                detail::walk_kernel(d, config.n_steps, config.checkpoints, draws, pos.data(),
                                    prefix.data(), x.data());
                for (std::size_t c = 0; c < C; ++c) {
                    const double* s = pos.data() + c * d;
                    double* acc = part.sum_s.data() + c * d;
                    for (std::size_t k = 0; k < d; ++k) acc[k] += s[k];
                    double* outer = part.sum_outer.data() + c * d * d;
                    for (std::size_t a = 0; a < d; ++a)
                        for (std::size_t b = a; b < d; ++b) outer[a * d + b] += s[a] * s[b];
                    bool at_origin = true;
                    for (std::size_t k = 0; k < d; ++k)
                        if (s[k] != 0.0) {
                            at_origin = false;
                            break;
                        }
                    if (at_origin) part.returns[c] += 1;
                    const double* fx = prefix.data() + c * r;
                    for (std::size_t q = 0; q < nchar; ++q) {
                        double turns = 0.0;
                        for (std::size_t b = 0; b < r; ++b)
                            turns += config.characters[q].indices[b] * fx[b];
                        const double arg = two_pi * frac(turns);
                        part.char_re[c * nchar + q] += std::cos(arg);
                        part.char_im[c * nchar + q] += std::sin(arg);
                    }
                    const double* xi = x.data() + c * d;
                    double* xacc = part.sum_x.data() + c * d;
                    double x2 = 0.0;
                    for (std::size_t k = 0; k < d; ++k) {
                        xacc[k] += xi[k];
                        x2 += xi[k] * xi[k];
                    }
                    part.sum_x2[c] += x2;
                    if (config.record_positions) {
                        double* slot = summary.positions[c].data() + w * d;
                        for (std::size_t k = 0; k < d; ++k) slot[k] = s[k];
                    }
                }
            } catch (const std::exception& e) {
                block_errors[blk] = "walker " + std::to_string(w) + ": " + e.what();
                failed.store(true);
                return;
            }
        }
    };

    auto worker = [&]() {
        std::vector<double> pos(C * d), prefix(C * r), x(C * d);
        while (!failed.load()) {
            const std::uint64_t blk = next_block.fetch_add(1);
            if (blk >= n_blocks) break;
            run_block(blk, pos, prefix, x);
        }
    };

    unsigned threads = n_threads == 0 ? std::thread::hardware_concurrency() : n_threads;
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_blocks)));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    if (failed.load()) {
        for (const std::string& msg : block_errors)
            if (!msg.empty()) throw std::runtime_error("run_ensemble: " + msg);
    }

    // Deterministic reduction: fold block partials in index order.
    detail::BlockPartial total(C, d, nchar);
    for (const detail::BlockPartial& part : partials) total.merge(part);

    const double inv_m = 1.0 / static_cast<double>(M);
    for (std::size_t c = 0; c < C; ++c) {
        CheckpointSummary cs;
        cs.step = config.checkpoints[c];
        cs.mean.resize(d);
        for (std::size_t k = 0; k < d; ++k) cs.mean[k] = total.sum_s[c * d + k] * inv_m;
        cs.covariance = SquareMatrix(d);
        const double inv_n = 1.0 / static_cast<double>(cs.step);
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = a; b < d; ++b) {
                const double second = total.sum_outer[c * d * d + a * d + b] * inv_m * inv_n;
                const double v = second - cs.mean[a] * inv_n * cs.mean[b];
                cs.covariance(a, b) = v;
                cs.covariance(b, a) = v;
            }
        cs.character_moments.resize(nchar);
        for (std::size_t q = 0; q < nchar; ++q)
            cs.character_moments[q] = {total.char_re[c * nchar + q] * inv_m,
                                       total.char_im[c * nchar + q] * inv_m};
        cs.return_count = total.returns[c];
        cs.return_frequency = static_cast<double>(cs.return_count) * inv_m;
        cs.x_mean.resize(d);
        double x_mean_norm2 = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            cs.x_mean[k] = total.sum_x[c * d + k] * inv_m;
            x_mean_norm2 += cs.x_mean[k] * cs.x_mean[k];
        }
        cs.x_second_moment = total.sum_x2[c] * inv_m;
        cs.x_variance = cs.x_second_moment - x_mean_norm2;
        summary.checkpoints.push_back(std::move(cs));
    }
    return summary;
}

/// Exact variance series Var(X_n) = E||X_n||^2 - ||E(X_n)||^2 for
/// n = 1..n_max, computed from the laws alone: steps have unit norm, so
/// E||X_n||^2 = 1, and E(X_n) = E(R_1...R_{n-1}) E(T_n) with the expected
/// operator accumulated block by block as a running Fourier product.
inline std::vector<double> exact_x_variance_series(const TranslationLaw& translation,
                                                   const RotationLaw& rotation,
                                                   std::uint64_t n_max) {
    if (translation.dim() != rotation.ambient_dim())
        throw std::invalid_argument("exact_x_variance_series: dimension mismatch");
    const std::size_t d = translation.dim();
    const std::size_t r = d / 2;
    std::vector<std::complex<double>> block_prod(r, 1.0);
    std::vector<Character> block_chars;
    for (std::size_t b = 0; b < r; ++b) {
        Character chi{std::vector<int>(r, 0)};
        chi.indices[b] = 1;
        block_chars.push_back(std::move(chi));
    }
    std::vector<double> out(n_max);
    for (std::uint64_t n = 1; n <= n_max; ++n) {
        // block_prod currently holds the transform of R_1...R_{n-1}
        const std::vector<double> mean_t = translation.expected_step(n);
        double norm2 = 0.0;
        for (std::size_t b = 0; b < r; ++b) {
            const double re = block_prod[b].real(), im = block_prod[b].imag();
            const double ex = re * mean_t[2 * b] - im * mean_t[2 * b + 1];
            const double ey = im * mean_t[2 * b] + re * mean_t[2 * b + 1];
            norm2 += ex * ex + ey * ey;
        }
        if (d % 2 == 1) norm2 += mean_t[d - 1] * mean_t[d - 1];
        out[n - 1] = 1.0 - norm2;
        if (!rotation.is_identity_law())
            for (std::size_t b = 0; b < r; ++b) block_prod[b] *= step_fourier(rotation, n, block_chars[b]);
    }
    return out;
}

}  // namespace motionwalk
