#pragma once

#include "svrs/oracle.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace svrs {

/// `Paper` charges 2 for every sampled client, master included, which
/// reproduces the 2(n-1) + 2T epoch formula. `Exact` charges nothing for
/// exchanges the master has with itself.
enum class CountingMode { Paper, Exact };

std::string to_string(CountingMode mode);
CountingMode parse_counting_mode(const std::string& s);

enum class EventKind { Broadcast, Gradient, Prox, LocalGradient, LocalProx };

std::string to_string(EventKind kind);

struct LedgerEvent {
  std::uint64_t step;
  EventKind kind;
  Index node;
  std::uint64_t cost;
};

/// Counts vector exchanges on the star network. One exchange is one
/// d-dimensional vector crossing one master-client edge; scalars are free.
class CommLedger {
 public:
  explicit CommLedger(bool log_events = false) : log_events_(log_events) {}

  std::uint64_t vector_exchanges() const { return vector_exchanges_; }
  std::uint64_t component_grad_calls() const { return component_grad_calls_; }
  std::uint64_t component_prox_calls() const { return component_prox_calls_; }
  std::uint64_t full_gradient_rounds() const { return full_gradient_rounds_; }
  const std::vector<LedgerEvent>& events() const { return events_; }
  bool logging() const { return log_events_; }

  void record(EventKind kind, Index node, std::uint64_t cost, std::uint64_t grads, std::uint64_t proxes);

  /// CSV with header `step,event,node,cost`; nodes are printed 1-based.
  void write_csv(std::ostream& os) const;

 private:
  bool log_events_;
  std::uint64_t vector_exchanges_ = 0;
  std::uint64_t component_grad_calls_ = 0;
  std::uint64_t component_prox_calls_ = 0;
  std::uint64_t full_gradient_rounds_ = 0;
  std::uint64_t step_ = 0;
  std::vector<LedgerEvent> events_;
};

/// Hook for instrumentation (information-set tracking on the hard instance).
/// Receives every oracle answer and every round boundary.
class OracleObserver {
 public:
  virtual ~OracleObserver() = default;
  virtual void on_oracle(EventKind kind, Index node, const Vector& query, const Vector& answer) = 0;
  /// Points formed by linear combination on the master (iterates, interpolations).
  virtual void on_point(const Vector& point) = 0;
  /// End of one communication round. `anchor` marks rounds that ended with
  /// a full broadcast; `sampled` is the client sampled in the round (or -1).
  virtual void on_round_end(bool anchor, Index sampled, const Vector& iterate) = 0;
};

/// Problem plus accounting. All arithmetic is delegated to the inner problem;
/// every oracle access a solver makes goes through here.
class NetProblem {
 public:
  explicit NetProblem(const Problem& inner, CountingMode mode = CountingMode::Paper, bool log_events = false);

  const Problem& inner() const { return *inner_; }
  CommLedger& ledger() { return ledger_; }
  const CommLedger& ledger() const { return ledger_; }
  CountingMode mode() const { return mode_; }
  Index n() const { return inner_->n(); }
  Index dim() const { return inner_->dim(); }
  Index master() const { return inner_->master(); }

  void set_observer(OracleObserver* obs) { observer_ = obs; }
  OracleObserver* observer() const { return observer_; }
  /// With accounting disabled the ledger is left untouched.
  void set_accounting(bool enabled) { accounting_ = enabled; }

  /// Master sends x to every client and collects all grad f_i(x): 2(n-1)
  /// exchanges. The component gradients are cached as the current anchor.
  Vector broadcast_full_gradient(const Vector& x);
  /// Master sends x to client i and receives grad f_i(x): 2 exchanges.
  Vector fetch_component_gradient(Index i, const Vector& x);
  /// Master sends x to client i and receives prox_{f_i}^gamma(x): 2 exchanges.
  Vector fetch_component_prox(Index i, const Vector& x, double gamma);
  /// Master-local oracle calls; never communicate.
  Vector master_gradient(const Vector& x);
  Vector master_prox(const Vector& x, double gamma);

  /// Cached grad f_i at the last broadcast point.
  const Vector& anchor_component_gradient(Index i) const;
  const Vector& anchor_full_gradient() const { return anchor_full_; }
  bool has_anchor() const { return has_anchor_; }

  void note_point(const Vector& x) const;
  void end_round(bool anchor, Index sampled, const Vector& iterate) const;
  /// Epoch-based solvers: the round that ends an epoch closes only after the
  /// next anchor broadcast, which reports it as an anchor round.
  void defer_anchor_round(Index sampled);
  /// Reports a still-open deferred round (end of a run).
  void flush_rounds(const Vector& iterate);

 private:
  void check_index(Index i) const;
  std::uint64_t pair_cost(Index i) const;

  const Problem* inner_;
  CommLedger ledger_;
  CountingMode mode_;
  bool accounting_ = true;
  OracleObserver* observer_ = nullptr;
  std::vector<Vector> anchor_components_;
  Vector anchor_full_;
  bool has_anchor_ = false;
  std::optional<Index> pending_round_;
};

/// Expected SVRS epoch cost 2(n-1) + 2/p when every sampled client is charged.
double expected_epoch_cost(long n, double p);

}  // namespace svrs
