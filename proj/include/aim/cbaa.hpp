// Modified consensus-based auction (CBAA-M): agents agree on a common list
// ordered by decreasing bid. Each iteration runs a local bidding phase
// followed by a max-consensus phase over a directed communication graph.
#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

namespace aim {

struct AgentId {
  std::uint32_t value = 0;
  auto operator<=>(const AgentId&) const = default;
};

/// Per-agent pair (winners, bids) of length S. An empty slot holds no
/// winner and a zero bid.
struct AuctionVectors {
  std::vector<std::optional<AgentId>> winners;
  std::vector<double> bids;

  static AuctionVectors empty(std::size_t size) {
    return {std::vector<std::optional<AgentId>>(size), std::vector<double>(size, 0.0)};
  }
  std::size_t size() const { return bids.size(); }
  bool contains(AgentId id) const;
  /// Every slot filled.
  bool complete() const;

  bool operator==(const AuctionVectors&) const = default;
};

/// Directed graph; an edge (from, to) means `from` transmits to `to`.
/// Self-loops are always present.
class CommGraph {
 public:
  explicit CommGraph(std::vector<AgentId> nodes);

  static CommGraph complete(std::vector<AgentId> nodes);

  void add_edge(AgentId from, AgentId to);
  const std::vector<AgentId>& nodes() const { return nodes_; }
  /// Agents whose messages `to` receives, itself included.
  const std::set<AgentId>& in_neighbors(AgentId to) const { return in_.at(to); }

 private:
  std::vector<AgentId> nodes_;
  std::map<AgentId, std::set<AgentId>> in_;
};

/// Bidding phase for one agent. Writes `self` over the first slot whose bid is
/// beaten, unless `self` is already listed or no slot is beaten.
AuctionVectors phase1_bid(AgentId self, double bid, const AuctionVectors& vecs);

/// Consensus phase: slots 1..round take the maximum bid over `received` and the
/// winner reported by a vector attaining it (lowest AgentId on ties). Slots
/// beyond `round` keep the values of `mine`.
AuctionVectors phase2_update(const AuctionVectors& mine, std::span<const AuctionVectors> received,
                             std::size_t round);

/// Synchronous round driver. Exposes every agent's vectors between rounds, so
/// callers can inspect convergence on arbitrary graphs.
class Auction {
 public:
  Auction(std::map<AgentId, double> bids, CommGraph graph);

  /// Runs one iteration (all agents bid, then all agents update from a
  /// snapshot of the round-start messages).
  void step();
  std::size_t round() const { return round_; }
  std::size_t size() const { return bids_.size(); }
  const std::map<AgentId, AuctionVectors>& vectors() const { return vectors_; }
  /// All agents hold identical, complete vectors.
  bool agreed() const;
  bool has_ties() const { return ties_; }

 private:
  std::map<AgentId, double> bids_;
  CommGraph graph_;
  std::map<AgentId, AuctionVectors> vectors_;
  // Agents (by position in bids_) that share in-neighbors form a group and
  // merge the same inbox. inbox_[g] lists the positions group g hears.
  std::vector<std::size_t> group_;
  std::vector<std::vector<std::size_t>> inbox_;
  // closed_[g]: every agent group g hears is itself in group g
  std::vector<bool> closed_;
  // scratch reused across rounds
  std::vector<AuctionVectors> messages_, merged_, inbox_buffer_;
  std::vector<std::size_t> written_;
  std::size_t round_ = 0;
  bool ties_ = false;
};

struct AuctionResult {
  std::vector<AgentId> winners;
  std::vector<double> bids;
  std::size_t rounds = 0;
  bool had_ties = false; // non-distinct bids; result determinized by the tie-break
  bool agreed = false;   // all agents held identical complete vectors at the end
};

/// Runs exactly S iterations. On a complete graph with distinct bids the result
/// is the agents sorted by decreasing bid. Throws std::invalid_argument on an
/// empty agent set or a non-positive bid.
AuctionResult run_auction(const std::map<AgentId, double>& bids, const CommGraph& graph);
AuctionResult run_auction(const std::map<AgentId, double>& bids);

} // namespace aim
