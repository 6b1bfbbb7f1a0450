#include "svrs/netsim.hpp"

#include <ostream>
#include <stdexcept>

namespace svrs {

std::string to_string(CountingMode mode) { return mode == CountingMode::Paper ? "paper" : "exact"; }

CountingMode parse_counting_mode(const std::string& s) {
  if (s == "paper") return CountingMode::Paper;
  if (s == "exact") return CountingMode::Exact;
  throw std::invalid_argument("unknown counting mode '" + s + "' (expected paper|exact)");
}

std::string to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Broadcast: return "broadcast";
    case EventKind::Gradient: return "grad";
    case EventKind::Prox: return "prox";
    case EventKind::LocalGradient: return "local_grad";
    case EventKind::LocalProx: return "local_prox";
  }
  return "unknown";
}

void CommLedger::record(EventKind kind, Index node, std::uint64_t cost, std::uint64_t grads,
                        std::uint64_t proxes) {
  vector_exchanges_ += cost;
  component_grad_calls_ += grads;
  component_prox_calls_ += proxes;
  if (kind == EventKind::Broadcast) ++full_gradient_rounds_;
  if (log_events_) events_.push_back({step_, kind, node, cost});
  ++step_;
}

void CommLedger::write_csv(std::ostream& os) const {
  os << "step,event,node,cost\n";
  for (const auto& e : events_) os << e.step << ',' << to_string(e.kind) << ',' << (e.node + 1) << ',' << e.cost << '\n';
}

NetProblem::NetProblem(const Problem& inner, CountingMode mode, bool log_events)
    : inner_(&inner), ledger_(log_events), mode_(mode) {}

void NetProblem::check_index(Index i) const {
  if (i < 0 || i >= n())
    throw std::out_of_range("node index " + std::to_string(i + 1) + " out of range [1, " + std::to_string(n()) + "]");
}

std::uint64_t NetProblem::pair_cost(Index i) const {
  if (i == master() && mode_ == CountingMode::Exact) return 0;
  return 2;
}

Vector NetProblem::broadcast_full_gradient(const Vector& x) {
  if (x.size() != dim()) throw std::invalid_argument("broadcast_full_gradient: dimension mismatch");
  const auto nn = static_cast<std::size_t>(n());
  anchor_components_.resize(nn);
  anchor_full_ = Vector::Zero(dim());
  for (std::size_t i = 0; i < nn; ++i) {
    anchor_components_[i] = inner_->component(static_cast<Index>(i)).gradient(x);
    anchor_full_ += anchor_components_[i];
    if (observer_) observer_->on_oracle(EventKind::Broadcast, static_cast<Index>(i), x, anchor_components_[i]);
  }
  anchor_full_ /= static_cast<double>(n());
  has_anchor_ = true;
  if (accounting_)
    ledger_.record(EventKind::Broadcast, master(), 2 * static_cast<std::uint64_t>(n() - 1), static_cast<std::uint64_t>(n()), 0);
  if (observer_) observer_->on_point(anchor_full_);
  if (pending_round_) {
    end_round(true, *pending_round_, x);
    pending_round_.reset();
  }
  return anchor_full_;
}

Vector NetProblem::fetch_component_gradient(Index i, const Vector& x) {
  check_index(i);
  if (x.size() != dim()) throw std::invalid_argument("fetch_component_gradient: dimension mismatch");
  Vector g = inner_->component(i).gradient(x);
  if (accounting_) ledger_.record(EventKind::Gradient, i, pair_cost(i), 1, 0);
  if (observer_) observer_->on_oracle(EventKind::Gradient, i, x, g);
  return g;
}

Vector NetProblem::fetch_component_prox(Index i, const Vector& x, double gamma) {
  check_index(i);
  if (x.size() != dim()) throw std::invalid_argument("fetch_component_prox: dimension mismatch");
  const ComponentOracle& c = inner_->component(i);
  if (!c.has_closed_prox()) throw std::invalid_argument("component " + std::to_string(i + 1) + " has no proximal oracle");
  Vector u = c.prox(x, gamma);
  if (accounting_) ledger_.record(EventKind::Prox, i, pair_cost(i), 0, 1);
  if (observer_) observer_->on_oracle(EventKind::Prox, i, x, u);
  return u;
}

Vector NetProblem::master_gradient(const Vector& x) {
  Vector g = inner_->component(master()).gradient(x);
  if (accounting_) ledger_.record(EventKind::LocalGradient, master(), 0, 1, 0);
  if (observer_) observer_->on_oracle(EventKind::LocalGradient, master(), x, g);
  return g;
}

Vector NetProblem::master_prox(const Vector& x, double gamma) {
  Vector u = inner_->component(master()).prox(x, gamma);
  if (accounting_) ledger_.record(EventKind::LocalProx, master(), 0, 0, 1);
  if (observer_) observer_->on_oracle(EventKind::LocalProx, master(), x, u);
  return u;
}

const Vector& NetProblem::anchor_component_gradient(Index i) const {
  check_index(i);
  if (!has_anchor_) throw std::logic_error("no anchor: broadcast_full_gradient has not been called");
  return anchor_components_[static_cast<std::size_t>(i)];
}

void NetProblem::note_point(const Vector& x) const {
  if (observer_) observer_->on_point(x);
}

void NetProblem::end_round(bool anchor, Index sampled, const Vector& iterate) const {
  if (observer_) observer_->on_round_end(anchor, sampled, iterate);
}

void NetProblem::defer_anchor_round(Index sampled) { pending_round_ = sampled; }

void NetProblem::flush_rounds(const Vector& iterate) {
  if (pending_round_) {
    end_round(true, *pending_round_, iterate);
    pending_round_.reset();
  }
}

double expected_epoch_cost(long n, double p) {
  if (n < 1) throw std::invalid_argument("expected_epoch_cost: n must be >= 1");
  if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("expected_epoch_cost: p must lie in (0, 1]");
  return 2.0 * static_cast<double>(n - 1) + 2.0 / p;
}

}  // namespace svrs
