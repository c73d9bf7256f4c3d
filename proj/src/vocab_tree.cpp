#include "docnade/vocab_tree.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <stdexcept>

namespace docnade {

namespace {

// Relabels internal nodes in preorder (root 0) and checks that the structure
// is a full binary tree over the leaves 0..V-1.
std::vector<BinaryWordTree::Node> canonicalize(const std::vector<BinaryWordTree::Node>& nodes,
                                               std::uint32_t root) {
  const std::size_t n = nodes.size();
  if (n == 0) throw std::invalid_argument("degenerate vocabulary");
  if (root >= n) throw std::invalid_argument("tree: root out of range");
  std::vector<std::uint32_t> new_id(n, UINT32_MAX);
  std::vector<BinaryWordTree::Node> out;
  out.reserve(n);
  std::vector<char> leaf_seen(n + 1, 0);

  // Explicit stack keeps skewed (Huffman) trees off the call stack.
  struct Frame {
    std::uint32_t old_id;
    int stage;
  };
  std::vector<Frame> stack{{root, 0}};
  new_id[root] = 0;
  out.push_back({});
  auto visit_child = [&](const BinaryWordTree::Child& c, BinaryWordTree::Child& dst) -> bool {
    if (c.is_leaf) {
      if (c.index > n || leaf_seen[c.index]) throw std::invalid_argument("tree: bad or repeated leaf");
      leaf_seen[c.index] = 1;
      dst = c;
      return false;
    }
    if (c.index >= n) throw std::invalid_argument("tree: child out of range");
    if (new_id[c.index] != UINT32_MAX) throw std::invalid_argument("tree: node reached twice");
    new_id[c.index] = static_cast<std::uint32_t>(out.size());
    dst = {false, new_id[c.index]};
    out.push_back({});
    return true;
  };
  while (!stack.empty()) {
    Frame& f = stack.back();
    const auto& node = nodes[f.old_id];
    std::uint32_t me = new_id[f.old_id];
    if (f.stage == 0) {
      f.stage = 1;
      if (visit_child(node.left, out[me].left)) stack.push_back({node.left.index, 0});
    } else if (f.stage == 1) {
      f.stage = 2;
      if (visit_child(node.right, out[me].right)) stack.push_back({node.right.index, 0});
    } else {
      stack.pop_back();
    }
  }
  if (out.size() != n) throw std::invalid_argument("tree: unreachable internal nodes");
  if (!std::all_of(leaf_seen.begin(), leaf_seen.end(), [](char s) { return s != 0; }))
    throw std::invalid_argument("tree: leaves do not cover the vocabulary");
  return out;
}

}  // namespace

BinaryWordTree::BinaryWordTree(std::vector<Node> nodes, std::uint32_t root)
    : nodes_(canonicalize(nodes, root)) {
  const std::size_t vocab = nodes_.size() + 1;
  paths_.assign(vocab, {});
  bits_.assign(vocab, {});
  // Preorder numbering means a node's parent always has a smaller id, so the
  // path to each node can be built in a single forward sweep.
  std::vector<std::vector<std::uint32_t>> node_path(nodes_.size());
  std::vector<std::vector<std::uint8_t>> node_bits(nodes_.size());
  node_path[0] = {0};
  for (std::uint32_t id = 0; id < nodes_.size(); ++id) {
    const auto& node = nodes_[id];
    for (std::uint8_t bit = 0; bit < 2; ++bit) {
      const Child& c = bit ? node.right : node.left;
      auto p = node_path[id];
      auto b = node_bits[id];
      b.push_back(bit);
      if (c.is_leaf) {
        paths_[c.index] = std::move(p);
        bits_[c.index] = std::move(b);
      } else {
        p.push_back(c.index);
        node_path[c.index] = std::move(p);
        node_bits[c.index] = std::move(b);
      }
    }
    std::vector<std::uint32_t>().swap(node_path[id]);
    std::vector<std::uint8_t>().swap(node_bits[id]);
  }
}

std::span<const std::uint32_t> BinaryWordTree::path_nodes(WordId w) const {
  if (w >= paths_.size()) throw std::out_of_range("unknown word");
  return paths_[w];
}

std::span<const std::uint8_t> BinaryWordTree::path_bits(WordId w) const {
  if (w >= bits_.size()) throw std::out_of_range("unknown word");
  return bits_[w];
}

std::size_t BinaryWordTree::max_depth() const {
  std::size_t d = 0;
  for (const auto& p : paths_) d = std::max(d, p.size());
  return d;
}

std::string BinaryWordTree::preorder_flags() const {
  std::string flags;
  flags.reserve(2 * nodes_.size());
  for (const auto& node : nodes_) {
    flags.push_back(node.left.is_leaf ? 'L' : 'N');
    flags.push_back(node.right.is_leaf ? 'L' : 'N');
  }
  return flags;
}

std::vector<WordId> BinaryWordTree::preorder_leaves() const {
  std::vector<WordId> leaves;
  leaves.reserve(paths_.size());
  std::vector<Child> stack{{false, 0}};
  while (!stack.empty()) {
    Child c = stack.back();
    stack.pop_back();
    if (c.is_leaf) {
      leaves.push_back(c.index);
      continue;
    }
    stack.push_back(nodes_[c.index].right);
    stack.push_back(nodes_[c.index].left);
  }
  return leaves;
}

BinaryWordTree BinaryWordTree::from_preorder(const std::string& flags, std::span<const WordId> leaves) {
  if (flags.size() % 2 != 0 || flags.empty()) throw std::invalid_argument("tree: bad preorder flags");
  const std::size_t n = flags.size() / 2;
  if (leaves.size() != n + 1) throw std::invalid_argument("tree: leaf table size mismatch");
  std::vector<Node> nodes(n);
  std::size_t next_node = 1;
  std::size_t next_leaf = 0;
  // Stack of (node id, which child is pending).
  std::vector<std::pair<std::uint32_t, int>> stack{{0, 0}};
  while (!stack.empty()) {
    auto& [id, side] = stack.back();
    if (side == 2) {
      stack.pop_back();
      continue;
    }
    char flag = flags[2 * id + side];
    Child& dst = side == 0 ? nodes[id].left : nodes[id].right;
    ++side;
    if (flag == 'L') {
      if (next_leaf >= leaves.size()) throw std::invalid_argument("tree: leaf table exhausted");
      dst = {true, leaves[next_leaf++]};
    } else if (flag == 'N') {
      if (next_node >= n) throw std::invalid_argument("tree: too many internal nodes");
      dst = {false, static_cast<std::uint32_t>(next_node)};
      stack.push_back({static_cast<std::uint32_t>(next_node++), 0});
    } else {
      throw std::invalid_argument("tree: bad flag character");
    }
  }
  if (next_node != n || next_leaf != leaves.size()) throw std::invalid_argument("tree: preorder size mismatch");
  return BinaryWordTree(std::move(nodes));
}

bool operator==(const BinaryWordTree& a, const BinaryWordTree& b) {
  if (a.nodes_.size() != b.nodes_.size()) return false;
  for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
    const auto& x = a.nodes_[i];
    const auto& y = b.nodes_[i];
    if (x.left.is_leaf != y.left.is_leaf || x.left.index != y.left.index ||
        x.right.is_leaf != y.right.is_leaf || x.right.index != y.right.index)
      return false;
  }
  return true;
}

BinaryWordTree build_random_tree(std::size_t vocab_size, std::uint64_t seed) {
  if (vocab_size < 2) throw std::invalid_argument("degenerate vocabulary");
  std::vector<WordId> words(vocab_size);
  std::iota(words.begin(), words.end(), 0);
  Rng rng(seed);
  std::shuffle(words.begin(), words.end(), rng);

  std::vector<BinaryWordTree::Node> nodes;
  nodes.reserve(vocab_size - 1);
  // Returns the child reference for words[lo, hi).
  auto build = [&](auto&& self, std::size_t lo, std::size_t hi) -> BinaryWordTree::Child {
    if (hi - lo == 1) return {true, words[lo]};
    auto id = static_cast<std::uint32_t>(nodes.size());
    nodes.push_back({});
    std::size_t mid = lo + (hi - lo + 1) / 2;
    auto left = self(self, lo, mid);
    auto right = self(self, mid, hi);
    nodes[id] = {left, right};
    return {false, id};
  };
  build(build, 0, vocab_size);
  return BinaryWordTree(std::move(nodes));
}

BinaryWordTree build_huffman_tree(std::span<const std::uint64_t> frequencies) {
  const std::size_t vocab = frequencies.size();
  if (vocab < 2) throw std::invalid_argument("degenerate vocabulary");
  for (std::size_t w = 0; w < vocab; ++w)
    if (frequencies[w] == 0)
      throw std::invalid_argument("huffman: zero frequency for word " + std::to_string(w));

  struct Item {
    std::uint64_t weight;
    WordId min_word;
    BinaryWordTree::Child ref;
  };
  auto later = [](const Item& a, const Item& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.min_word > b.min_word;
  };
  std::priority_queue<Item, std::vector<Item>, decltype(later)> queue(later);
  for (WordId w = 0; w < vocab; ++w) queue.push({frequencies[w], w, {true, w}});

  std::vector<BinaryWordTree::Node> nodes;
  nodes.reserve(vocab - 1);
  while (queue.size() > 1) {
    Item a = queue.top();
    queue.pop();
    Item b = queue.top();
    queue.pop();
    auto id = static_cast<std::uint32_t>(nodes.size());
    nodes.push_back({a.ref, b.ref});
    queue.push({a.weight + b.weight, std::min(a.min_word, b.min_word), {false, id}});
  }
  return BinaryWordTree(std::move(nodes), queue.top().ref.index);
}

WordPath word_path(const BinaryWordTree& tree, WordId w) {
  if (w >= tree.vocab_size()) throw std::out_of_range("unknown word");
  auto nodes = tree.path_nodes(w);
  auto bits = tree.path_bits(w);
  return {{nodes.begin(), nodes.end()}, {bits.begin(), bits.end()}};
}

ClassPartition::ClassPartition(std::vector<std::vector<WordId>> members) : members_(std::move(members)) {
  std::size_t vocab = 0;
  for (const auto& m : members_) {
    if (m.empty()) throw std::invalid_argument("partition: empty class");
    vocab += m.size();
  }
  class_of_.assign(vocab, UINT32_MAX);
  slot_of_.assign(vocab, 0);
  for (std::uint32_t c = 0; c < members_.size(); ++c) {
    for (std::uint32_t s = 0; s < members_[c].size(); ++s) {
      WordId w = members_[c][s];
      if (w >= vocab || class_of_[w] != UINT32_MAX)
        throw std::invalid_argument("partition: classes do not partition the vocabulary");
      class_of_[w] = c;
      slot_of_[w] = s;
    }
  }
}

ClassPartition build_class_partition(std::size_t vocab_size) {
  if (vocab_size < 2) throw std::invalid_argument("degenerate vocabulary");
  std::size_t classes = 1;
  while (classes * classes < vocab_size) ++classes;
  std::size_t base = vocab_size / classes;
  std::size_t extra = vocab_size % classes;
  std::vector<std::vector<WordId>> members(classes);
  WordId next = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    std::size_t size = base + (c < extra ? 1 : 0);
    for (std::size_t k = 0; k < size; ++k) members[c].push_back(next++);
  }
  return ClassPartition(std::move(members));
}

}  // namespace docnade
