#pragma once

// Region agents, message transport and the three-phase decentralized
// algorithm (fixed maintenance relaxed, fixed maintenance binary, then
// subgradient maintenance search).

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "cbmuc/case_model.hpp"
#include "cbmuc/consensus.hpp"
#include "cbmuc/milp.hpp"
#include "cbmuc/subproblem.hpp"

namespace cbmuc {

class RuntimeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A receive waited longer than the round timeout.
class DeadlockError : public RuntimeError {
public:
    using RuntimeError::RuntimeError;
};

/// An epoch model could not be solved.
class SolverFailure : public RuntimeError {
public:
    using RuntimeError::RuntimeError;
};

// ---- messages -------------------------------------------------------------

enum class MessageKind { ThetaShare, ViolationShare, UboundShare, ConvFlag };
const char* to_string(MessageKind kind);
MessageKind parse_message_kind(std::string_view text);

struct Message {
    int round = 0;
    std::string phase;
    int sender = 0;
    int receiver = 0;
    MessageKind kind = MessageKind::ConvFlag;
    std::vector<std::pair<std::string, double>> rows;
};

/// `v1 <round> <phase> <sender> <receiver> <kind>` then `key=value` lines,
/// values with 17 significant digits.
std::string encode_message(const Message& m);
Message decode_message(std::string_view text);
/// Decimal byte count, newline, payload.
std::string frame_message(const std::string& payload);

// ---- trace ----------------------------------------------------------------

struct TraceEvent {
    double time = 0.0;  // seconds since the run started
    int region = 0;
    int round = 0;
    std::string phase;
    std::string what;  // "begin" (solve starts) or "end" (flag sent)
};

class Trace {
public:
    Trace();
    void message(const std::string& encoded);
    void event(int region, int round, const std::string& phase, const std::string& what);
    std::vector<std::string> messages() const;
    std::vector<TraceEvent> events() const;

private:
    mutable std::mutex mu_;
    std::chrono::steady_clock::time_point start_;
    std::vector<std::string> messages_;
    std::vector<TraceEvent> events_;
};

/// True when no region begins round k+1 before every region ended round k.
bool barrier_respected(const std::vector<TraceEvent>& events);

// ---- transport ------------------------------------------------------------

class Transport {
public:
    Transport(std::vector<int> regions, double timeout_seconds, Trace* trace);
    virtual ~Transport();
    Transport(const Transport&) = delete;
    Transport& operator=(const Transport&) = delete;

    /// Encodes the message and hands it to the delivery path.
    void send(const Message& m);
    /// Blocks until the message from `sender` of `kind` for `round` arrives.
    Message receive(int receiver, int sender, MessageKind kind, int round);
    /// Wakes every blocked receiver with an error.
    void abort(const std::string& reason);
    std::int64_t delivered() const;

protected:
    virtual void transmit(int sender, int receiver, const std::string& payload) = 0;
    void deliver(const std::string& payload);

private:
    std::vector<int> regions_;
    double timeout_;
    Trace* trace_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::map<int, std::deque<Message>> inbox_;
    std::map<std::tuple<int, int, int>, int> last_round_;  // (sender, receiver, kind)
    std::string abort_reason_;
    std::int64_t delivered_ = 0;
};

enum class TransportKind { InProcess, Socket };

std::unique_ptr<Transport> make_transport(TransportKind kind, const std::vector<int>& regions,
                                          double timeout_seconds, Trace* trace);

// ---- worker pool ----------------------------------------------------------

/// Fixed-size pool for epoch solves.
class WorkerPool {
public:
    explicit WorkerPool(int threads);
    ~WorkerPool();
    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;
    /// Runs every task and rethrows the first failure (by task index).
    void run_all(const std::vector<std::function<void()>>& tasks);
    int size() const { return threads_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int threads_;
};

// ---- per-region optimisation -----------------------------------------------

struct MtResult {
    RegionSolution solution;
    double objective = 0.0;        // sum of epoch model objectives
    double pwl_error_bound = 0.0;
    std::vector<double> epoch_objective;
    std::vector<double> epoch_bound;
};

/// Builds and solves every epoch model of a region (concurrently when a pool
/// is given) and stitches the slices. `z_fixed[m]` overrides the z of epoch m
/// (empty = mode default). `only` restricts the solve to the listed epochs and
/// keeps the rest of `base`.
MtResult mt_opt(const RegionProblem& problem, const ConsensusState& delta, ModelMode mode,
                const std::vector<double>& alpha, const std::vector<std::vector<int>>& z_fixed,
                const PenaltyConfig& config, const milp::Limits& limits, WorkerPool* pool,
                const std::vector<int>& only = {}, const MtResult* base = nullptr,
                const std::string& dump_dir = {});

/// Number of maintenance epochs chosen per local generator.
std::vector<int> maintenance_counts(const RegionSolution& solution);
/// c x + d y + omega z over the horizon.
double dual_value(const RegionProblem& problem, const RegionSolution& solution);
/// |L_UB - L| / sum_g (1 - count_g)^2, or 0 when every count is 1.
double subgradient_step(double upper_bound, double value, const std::vector<int>& counts);
void update_alpha(std::vector<double>& alpha, double step, const std::vector<int>& counts);
/// Exactly-once repair: no epoch -> the cheapest omega - alpha epoch, several
/// -> keep the cheapest. Returns z[g][m].
std::vector<std::vector<int>> repair_cardinality(const std::vector<std::vector<int>>& z,
                                                 const std::vector<std::vector<double>>& omega,
                                                 const std::vector<double>& alpha);
/// |sum over owned buses of (demand - psi) - production| per step, or the
/// signed difference.
Series region_violation(const RegionProblem& problem, const RegionSolution& solution, bool signed_value);

// ---- the algorithm --------------------------------------------------------

enum class LubScope { Global, Regional };
enum class ViolationMode { Absolute, Signed };

struct RunOptions {
    PenaltyConfig penalty;
    double epsilon = 1e-2;
    int cap_fmrc = 200;
    int cap_fmbc = 200;
    int cap_bmbc = 500;
    int inner_cap = 30;
    LubScope lub_scope = LubScope::Global;
    ViolationMode violation = ViolationMode::Signed;
    TransportKind transport = TransportKind::InProcess;
    int threads = 1;
    double round_timeout = 300.0;  // seconds
    std::uint64_t seed = 1;
    milp::Limits limits;
    std::string dump_dir;  // failing epoch models are written here in LP format
};

struct RunInput {
    PartitionedCase pc;
    TimeGrid grid;
    std::vector<std::vector<double>> demand;  // [bus index][t]
    std::vector<std::vector<double>> omega;   // [generator index][m]
};

struct CostSummary {
    double operations = 0.0;
    double maintenance = 0.0;
    double curtailment = 0.0;
    double penalty = 0.0;
    double gross() const { return operations + maintenance + curtailment; }
};

struct RoundMetric {
    ModelMode phase = ModelMode::FMRC;
    int round = 0;
    int region = 0;
    double primal = 0.0;
    double dual = 0.0;
    bool local = false;
    double objective = 0.0;
    int inner_iterations = 0;
};

struct PhaseReport {
    ModelMode mode = ModelMode::FMRC;
    bool converged = false;
    int rounds = 0;
    double seconds = 0.0;
    CostSummary cost;
    double pwl_error_bound = 0.0;
};

struct GeneratorSchedule {
    int id = 0;
    int region = 0;
    std::vector<double> x, y;
    std::vector<int> z;
};

struct RunReport {
    std::vector<PhaseReport> phases;  // FMRC, FMBC, BMBC
    double upper_bound = 0.0;
    CostSummary cost;  // final BMBC solution
    std::vector<GeneratorSchedule> schedules;  // by generator index
    std::map<int, RegionSolution> solutions;
    std::vector<RoundMetric> metrics;
    int inner_cap_hits = 0;
    int repairs = 0;
    double max_nodal_residual = 0.0;
    bool cardinality = true;
    double seconds = 0.0;
    std::int64_t messages = 0;
    std::shared_ptr<Trace> trace;

    bool converged() const;
};

RunReport run_algorithm(const RunInput& input, const RunOptions& options);
/// The same algorithm with the whole network as one region.
RunReport centralized_benchmark(const RunInput& input, const RunOptions& options);

}  // namespace cbmuc
