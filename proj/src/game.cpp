#include "nmpg/game.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nmpg {

namespace {

constexpr double kRowTol = 1e-12;

bool is_sorted_unique(const std::vector<int>& v) {
  return std::adjacent_find(v.begin(), v.end(), std::greater_equal<int>()) == v.end();
}

bool subset_of(const std::vector<int>& a, const std::vector<int>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

LocalReward table_reward(std::vector<int> scope, std::vector<int> radices,
                         std::vector<double> table) {
  MixedRadix codec(radices);
  if (codec.size() != table.size())
    throw std::invalid_argument("table_reward: table size does not match scope radices");
  const std::size_t k = scope.size();
  if (radices.size() != 2 * k)
    throw std::invalid_argument("table_reward: need one state and one action radix per agent");
  auto fn = [codec, table = std::move(table), k](std::span<const int> s,
                                                 std::span<const int> a) {
    std::size_t code = 0;
    const auto& r = codec.radices();
    for (std::size_t j = 0; j < k; ++j) code = code * r[j] + s[j];
    for (std::size_t j = 0; j < k; ++j) code = code * r[k + j] + a[j];
    return table[code];
  };
  return LocalReward{std::move(scope), std::move(fn)};
}

NetworkedGame::NetworkedGame(Parts p)
    : graph_(std::move(p.graph)),
      state_labels_(std::move(p.state_labels)),
      action_labels_(std::move(p.action_labels)),
      kernels_(std::move(p.kernels)),
      rewards_(std::move(p.rewards)),
      kappa_r_(p.kappa_r),
      gamma_(p.gamma),
      mu_(std::move(p.mu)),
      r_min_(p.r_min),
      r_max_(p.r_max),
      congestion_(std::move(p.congestion)),
      source_(std::move(p.source)) {
  const int n = graph_.size();
  if (static_cast<int>(state_labels_.size()) != n || static_cast<int>(action_labels_.size()) != n ||
      static_cast<int>(kernels_.size()) != n || static_cast<int>(rewards_.size()) != n)
    throw std::invalid_argument("NetworkedGame: per-agent arrays must have length n");
  if (!(gamma_ > 0.0 && gamma_ < 1.0))
    throw std::invalid_argument("NetworkedGame: gamma must lie in (0,1)");
  if (kappa_r_ < 0) throw std::invalid_argument("NetworkedGame: kappa_r must be non-negative");
  if (!(r_min_ <= r_max_)) throw std::invalid_argument("NetworkedGame: empty reward range");

  std::vector<int> ns(n), na(n);
  for (int i = 0; i < n; ++i) {
    ns[i] = static_cast<int>(state_labels_[i].size());
    na[i] = static_cast<int>(action_labels_[i].size());
    if (ns[i] == 0 || na[i] == 0)
      throw std::invalid_argument("NetworkedGame: empty local space for agent " + std::to_string(i));
  }
  state_codec_ = MixedRadix(ns);
  action_codec_ = MixedRadix(na);

  for (int i = 0; i < n; ++i) {
    const auto& K = kernels_[i];
    if (!is_sorted_unique(K.scope) || !subset_of(K.scope, graph_.khop(i, 1)))
      throw std::invalid_argument("NetworkedGame: kernel scope of agent " + std::to_string(i) +
                                  " must be a sorted subset of its one-hop neighborhood");
    std::vector<int> radices;
    for (int j : K.scope) radices.push_back(ns[j]);
    MixedRadix codec(radices);
    const std::size_t rows = codec.size() * na[i];
    if (K.table.size() != rows * ns[i])
      throw std::invalid_argument("NetworkedGame: kernel table size mismatch for agent " +
                                  std::to_string(i));
    for (std::size_t r = 0; r < rows; ++r) {
      double sum = 0.0;
      for (int k = 0; k < ns[i]; ++k) {
        double v = K.table[r * ns[i] + k];
        if (!(v >= 0.0)) throw std::invalid_argument("NetworkedGame: negative kernel entry");
        sum += v;
      }
      if (std::abs(sum - 1.0) > kRowTol)
        throw std::invalid_argument("NetworkedGame: kernel row of agent " + std::to_string(i) +
                                    " does not sum to 1");
    }
    kernel_codecs_.push_back(std::move(codec));

    const auto& R = rewards_[i];
    if (!R.fn) throw std::invalid_argument("NetworkedGame: missing reward function");
    if (!is_sorted_unique(R.scope) || !subset_of(R.scope, graph_.khop(i, kappa_r_)))
      throw std::invalid_argument("NetworkedGame: reward scope of agent " + std::to_string(i) +
                                  " exceeds its kappa_r-hop neighborhood");
  }

  // Exhaustive range check where the reward's joint domain is small.
  for (int i = 0; i < n; ++i) {
    const auto& R = rewards_[i];
    std::vector<int> radices;
    for (int j : R.scope) radices.push_back(ns[j]);
    for (int j : R.scope) radices.push_back(na[j]);
    MixedRadix codec;
    try {
      codec = MixedRadix(radices);
    } catch (const std::overflow_error&) {
      continue;
    }
    if (codec.size() > 1'000'000) continue;
    const std::size_t k = R.scope.size();
    std::vector<int> x(2 * k, 0);
    do {
      double v = R.fn(std::span<const int>(x.data(), k), std::span<const int>(x.data() + k, k));
      if (!(v >= r_min_ - 1e-12 && v <= r_max_ + 1e-12))
        throw std::invalid_argument("NetworkedGame: reward of agent " + std::to_string(i) +
                                    " outside the declared range");
    } while (codec.next(x));
  }

  if (mu_.empty()) throw std::invalid_argument("NetworkedGame: empty initial distribution");
  double total = 0.0;
  for (const auto& e : mu_) {
    validate_state(e.state);
    if (!(e.prob >= 0.0)) throw std::invalid_argument("NetworkedGame: negative initial mass");
    total += e.prob;
  }
  if (std::abs(total - 1.0) > kRowTol)
    throw std::invalid_argument("NetworkedGame: initial distribution does not sum to 1");
}

void NetworkedGame::validate_state(std::span<const int> s) const {
  if (static_cast<int>(s.size()) != n()) throw std::invalid_argument("state has wrong length");
  for (int i = 0; i < n(); ++i)
    if (s[i] < 0 || s[i] >= num_states(i))
      throw std::out_of_range("state label out of range for agent " + std::to_string(i));
}

void NetworkedGame::validate_action(std::span<const int> a) const {
  if (static_cast<int>(a.size()) != n()) throw std::invalid_argument("action has wrong length");
  for (int i = 0; i < n(); ++i)
    if (a[i] < 0 || a[i] >= num_actions(i))
      throw std::out_of_range("action label out of range for agent " + std::to_string(i));
}

std::span<const double> NetworkedGame::kernel_row(int i, std::span<const int> s, int a_i) const {
  const auto& K = kernels_[i];
  const auto& r = kernel_codecs_[i].radices();
  std::size_t code = 0;
  for (std::size_t k = 0; k < K.scope.size(); ++k) code = code * r[k] + s[K.scope[k]];
  const std::size_t ns = num_states(i);
  const std::size_t row = code * num_actions(i) + a_i;
  return std::span<const double>(K.table.data() + row * ns, ns);
}

double NetworkedGame::reward(int i, std::span<const int> s, std::span<const int> a) const {
  const auto& R = rewards_[i];
  thread_local std::vector<int> ls, la;
  ls.resize(R.scope.size());
  la.resize(R.scope.size());
  for (std::size_t k = 0; k < R.scope.size(); ++k) {
    ls[k] = s[R.scope[k]];
    la[k] = a[R.scope[k]];
  }
  return R.fn(std::span<const int>(ls.data(), ls.size()), std::span<const int>(la.data(), la.size()));
}

void NetworkedGame::step(std::span<const int> s, std::span<const int> a, Rng& rng,
                         std::span<int> out) const {
  for (int i = 0; i < n(); ++i) out[i] = sample_categorical(kernel_row(i, s, a[i]), rng);
}

std::vector<int> NetworkedGame::step(std::span<const int> s, std::span<const int> a,
                                     Rng& rng) const {
  validate_state(s);
  validate_action(a);
  std::vector<int> out(n());
  step(s, a, rng, out);
  return out;
}

std::vector<int> NetworkedGame::sample_initial(Rng& rng) const {
  if (mu_.size() == 1) return mu_.front().state;
  std::vector<double> p;
  p.reserve(mu_.size());
  for (const auto& e : mu_) p.push_back(e.prob);
  return mu_[sample_categorical(p, rng)].state;
}

std::vector<std::pair<std::size_t, double>> NetworkedGame::global_kernel(
    std::span<const int> s, std::span<const int> a) const {
  validate_state(s);
  validate_action(a);
  if (state_codec_.size() > kGlobalKernelGuard)
    throw std::length_error("global_kernel: global state space exceeds the enumeration guard");
  std::vector<std::pair<std::size_t, double>> dist{{0, 1.0}};
  for (int i = 0; i < n(); ++i) {
    auto row = kernel_row(i, s, a[i]);
    std::vector<std::pair<std::size_t, double>> next;
    for (auto [code, p] : dist)
      for (int k = 0; k < num_states(i); ++k)
        if (row[k] > 0.0) next.emplace_back(code * num_states(i) + k, p * row[k]);
    dist = std::move(next);
  }
  return dist;
}

std::vector<double> NetworkedGame::mu_dense(std::size_t guard) const {
  if (state_codec_.size() > guard)
    throw std::length_error("mu_dense: global state space exceeds the enumeration guard");
  std::vector<double> out(state_codec_.size(), 0.0);
  for (const auto& e : mu_) out[state_codec_.encode(e.state)] += e.prob;
  return out;
}

NetworkedGame NetworkedGame::rescaled() const {
  Parts p{graph_, state_labels_, action_labels_, kernels_, rewards_, kappa_r_, gamma_, mu_,
          0.0,    1.0,           congestion_,    source_};
  const double lo = r_min_;
  const double width = r_max_ - r_min_;
  for (auto& R : p.rewards) {
    RewardFn f = R.fn;
    if (width > 0.0)
      R.fn = [f, lo, width](std::span<const int> s, std::span<const int> a) {
        return (f(s, a) - lo) / width;
      };
    else
      R.fn = [](std::span<const int>, std::span<const int>) { return 0.0; };
  }
  p.source = nlohmann::json();
  return NetworkedGame(std::move(p));
}

NetworkedGame NetworkedGame::with_gamma(double gamma) const {
  Parts p{graph_, state_labels_, action_labels_, kernels_, rewards_, kappa_r_, gamma, mu_,
          r_min_, r_max_,        congestion_,    source_};
  if (p.source.is_object() && p.source.contains("gamma")) p.source["gamma"] = gamma;
  return NetworkedGame(std::move(p));
}

}  // namespace nmpg
