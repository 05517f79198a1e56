#include "aim/cbaa.hpp"

#include <algorithm>
#include <stdexcept>

namespace aim {

bool AuctionVectors::contains(AgentId id) const {
  return std::any_of(winners.begin(), winners.end(), [id](const auto& w) { return w == id; });
}

bool AuctionVectors::complete() const {
  return std::all_of(winners.begin(), winners.end(), [](const auto& w) { return w.has_value(); });
}

CommGraph::CommGraph(std::vector<AgentId> nodes) : nodes_(std::move(nodes)) {
  for (AgentId n : nodes_) in_[n].insert(n);
  if (in_.size() != nodes_.size()) throw std::invalid_argument("duplicate agent id in graph");
}

CommGraph CommGraph::complete(std::vector<AgentId> nodes) {
  CommGraph g(std::move(nodes));
  std::vector<AgentId> sorted = g.nodes_;
  std::sort(sorted.begin(), sorted.end());
  for (auto& [to, from] : g.in_) from.insert(sorted.begin(), sorted.end());
  return g;
}

void CommGraph::add_edge(AgentId from, AgentId to) {
  if (!in_.contains(from) || !in_.contains(to)) throw std::invalid_argument("edge endpoint not in graph");
  in_[to].insert(from);
}

namespace {

// Returns the slot written, or size() when the agent did not bid.
std::size_t bid_into(AgentId self, double bid, AuctionVectors& vecs) {
  if (vecs.contains(self)) return vecs.size();
  for (std::size_t j = 0; j < vecs.size(); ++j) {
    if (bid > vecs.bids[j]) {
      vecs.winners[j] = self;
      vecs.bids[j] = bid;
      return j;
    }
  }
  return vecs.size();
}

// Max-consensus order on one slot: higher bid, then a named winner with the
// lower id.
bool beats(double rb, const std::optional<AgentId>& rw, double ob, const std::optional<AgentId>& ow) {
  if (rb != ob) return rb > ob;
  return rw && (!ow || *rw < *ow);
}

// Slots below `upto` take the best of `received`; the rest are left alone.
void merge_into(AuctionVectors& out, std::span<const AuctionVectors> received, std::size_t upto) {
  std::copy_n(received[0].bids.begin(), upto, out.bids.begin());
  std::copy_n(received[0].winners.begin(), upto, out.winners.begin());
  double* ob = out.bids.data();
  auto* ow = out.winners.data();
  for (const auto& r : received.subspan(1)) {
    const double* rb = r.bids.data();
    const auto* rw = r.winners.data();
    for (std::size_t j = 0; j < upto; ++j) {
      if (rb[j] < ob[j]) continue;
      if (beats(rb[j], rw[j], ob[j], ow[j])) {
        ob[j] = rb[j];
        ow[j] = rw[j];
      }
    }
  }
}

} // namespace

AuctionVectors phase1_bid(AgentId self, double bid, const AuctionVectors& vecs) {
  if (!(bid > 0.0)) throw std::invalid_argument("bid must be positive");
  AuctionVectors out = vecs;
  bid_into(self, bid, out);
  return out;
}

AuctionVectors phase2_update(const AuctionVectors& mine, std::span<const AuctionVectors> received,
                             std::size_t round) {
  if (received.empty()) throw std::invalid_argument("phase 2 needs at least the agent's own vectors");
  AuctionVectors out = mine;
  merge_into(out, received, std::min(round, mine.size()));
  return out;
}

Auction::Auction(std::map<AgentId, double> bids, CommGraph graph)
    : bids_(std::move(bids)), graph_(std::move(graph)) {
  if (bids_.empty()) throw std::invalid_argument("auction needs at least one agent");
  std::vector<double> seen;
  for (const auto& [id, bid] : bids_) {
    if (!(bid > 0.0)) throw std::invalid_argument("bids must be positive");
    (void)graph_.in_neighbors(id); // throws if the agent is not a graph node
    vectors_.emplace(id, AuctionVectors::empty(bids_.size()));
    seen.push_back(bid);
  }
  std::sort(seen.begin(), seen.end());
  ties_ = std::adjacent_find(seen.begin(), seen.end()) != seen.end();

  std::map<AgentId, std::size_t> position;
  for (const auto& [id, bid] : bids_) position.emplace(id, position.size());
  for (const auto& [id, bid] : bids_) {
    std::vector<std::size_t> heard;
    for (AgentId from : graph_.in_neighbors(id))
      if (auto it = position.find(from); it != position.end()) heard.push_back(it->second);
    auto g = std::find(inbox_.begin(), inbox_.end(), heard);
    if (g == inbox_.end()) g = inbox_.insert(inbox_.end(), std::move(heard));
    group_.push_back(static_cast<std::size_t>(g - inbox_.begin()));
  }
  for (std::size_t g = 0; g < inbox_.size(); ++g)
    closed_.push_back(std::all_of(inbox_[g].begin(), inbox_[g].end(), [&](std::size_t k) { return group_[k] == g; }));
}

void Auction::step() {
  ++round_;
  const std::size_t prev = std::min(round_ - 1, bids_.size());
  const std::size_t upto = std::min(round_, bids_.size());
  messages_.resize(vectors_.size());
  written_.resize(vectors_.size());
  std::size_t i = 0;
  for (const auto& [id, vecs] : vectors_) {
    messages_[i] = vecs;
    written_[i] = bid_into(id, bids_.at(id), messages_[i]);
    ++i;
  }

  // The consensus prefix is computed once per group; only the tail beyond
  // `round` comes from each agent's own message.
  merged_.resize(inbox_.size());
  std::vector<bool> done(inbox_.size(), false);
  for (i = 0; i < group_.size(); ++i) {
    const std::size_t g = group_[i];
    if (done[g]) continue;
    done[g] = true;
    auto& m = merged_[g];
    if (closed_[g] && round_ > 1) {
      // Everyone this group hears shares last round's prefix, so below
      // `prev` only the slots just bid on can change.
      for (std::size_t k : inbox_[g])
        if (written_[k] < prev && beats(messages_[k].bids[written_[k]], messages_[k].winners[written_[k]],
                                        m.bids[written_[k]], m.winners[written_[k]])) {
          m.bids[written_[k]] = messages_[k].bids[written_[k]];
          m.winners[written_[k]] = messages_[k].winners[written_[k]];
        }
      for (std::size_t j = prev; j < upto; ++j) {
        const auto& first = messages_[inbox_[g].front()];
        m.bids[j] = first.bids[j];
        m.winners[j] = first.winners[j];
        for (std::size_t k : inbox_[g])
          if (beats(messages_[k].bids[j], messages_[k].winners[j], m.bids[j], m.winners[j])) {
            m.bids[j] = messages_[k].bids[j];
            m.winners[j] = messages_[k].winners[j];
          }
      }
      continue;
    }
    m = messages_[i];
    if (inbox_[g].size() == messages_.size()) {
      merge_into(m, messages_, upto);
    } else {
      inbox_buffer_.clear();
      for (std::size_t j : inbox_[g]) inbox_buffer_.push_back(messages_[j]);
      merge_into(m, inbox_buffer_, upto);
    }
  }
  i = 0;
  for (auto& [id, vecs] : vectors_) {
    const auto& m = merged_[group_[i]];
    std::swap(vecs, messages_[i]);
    std::copy_n(m.bids.begin(), upto, vecs.bids.begin());
    std::copy_n(m.winners.begin(), upto, vecs.winners.begin());
    ++i;
  }
}

bool Auction::agreed() const {
  const auto& first = vectors_.begin()->second;
  if (!first.complete()) return false;
  return std::all_of(vectors_.begin(), vectors_.end(), [&](const auto& kv) { return kv.second == first; });
}

namespace {

AuctionResult play(Auction& auction) {
  while (auction.round() < auction.size()) auction.step();

  AuctionResult result;
  result.rounds = auction.round();
  result.had_ties = auction.has_ties();
  result.agreed = auction.agreed();
  const auto& vecs = auction.vectors().begin()->second;
  for (std::size_t j = 0; j < vecs.size(); ++j) {
    if (!vecs.winners[j]) continue;
    result.winners.push_back(*vecs.winners[j]);
    result.bids.push_back(vecs.bids[j]);
  }
  return result;
}

} // namespace

AuctionResult run_auction(const std::map<AgentId, double>& bids, const CommGraph& graph) {
  Auction auction(bids, graph);
  return play(auction);
}

AuctionResult run_auction(const std::map<AgentId, double>& bids) {
  std::vector<AgentId> nodes;
  for (const auto& kv : bids) nodes.push_back(kv.first);
  Auction auction(bids, CommGraph::complete(std::move(nodes)));
  return play(auction);
}

} // namespace aim
