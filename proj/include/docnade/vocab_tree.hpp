#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "docnade/corpus.hpp"

namespace docnade {

/// Full binary tree whose V leaves are the words. Internal nodes are numbered
/// 0..V-2 with the root at 0; each holds one logistic unit in the models.
class BinaryWordTree {
 public:
  /// A child is either another internal node or a leaf carrying a word id.
  struct Child {
    bool is_leaf = false;
    std::uint32_t index = 0;  // internal node id, or word id for a leaf
  };
  struct Node {
    Child left;
    Child right;
  };

  BinaryWordTree() = default;
  /// Validates fullness and leaf coverage, renumbers the internal nodes in
  /// preorder, then derives every word's path.
  explicit BinaryWordTree(std::vector<Node> nodes, std::uint32_t root = 0);

  std::size_t vocab_size() const { return paths_.size(); }
  std::size_t internal_count() const { return nodes_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }

  /// Internal nodes from the root down to the leaf of w.
  std::span<const std::uint32_t> path_nodes(WordId w) const;
  /// Decision bits along path_nodes(w); 1 means "go right".
  std::span<const std::uint8_t> path_bits(WordId w) const;
  std::size_t max_depth() const;

  /// Preorder flags, two per internal node ('N' internal / 'L' leaf, left
  /// child first), and the word ids of the leaves in preorder.
  std::string preorder_flags() const;
  std::vector<WordId> preorder_leaves() const;
  static BinaryWordTree from_preorder(const std::string& flags, std::span<const WordId> leaves);

  friend bool operator==(const BinaryWordTree& a, const BinaryWordTree& b);

 private:
  std::vector<Node> nodes_;
  std::vector<std::vector<std::uint32_t>> paths_;
  std::vector<std::vector<std::uint8_t>> bits_;
};

/// Balanced tree from recursive halving of a seed-shuffled word list.
BinaryWordTree build_random_tree(std::size_t vocab_size, std::uint64_t seed);

/// Huffman tree; merge ties go to the subtree holding the smaller word id.
BinaryWordTree build_huffman_tree(std::span<const std::uint64_t> frequencies);

/// Path of word w through the tree. Throws "unknown word" when w >= V.
struct WordPath {
  std::vector<std::uint32_t> nodes;
  std::vector<std::uint8_t> bits;
};
WordPath word_path(const BinaryWordTree& tree, WordId w);

/// Two-level partition for the hierarchical softmax: ceil(sqrt(V)) classes of
/// contiguous word ids, sizes differing by at most one.
class ClassPartition {
 public:
  ClassPartition() = default;
  /// Rebuilds from per-class member lists; checks that they partition 0..V-1.
  explicit ClassPartition(std::vector<std::vector<WordId>> members);

  std::size_t vocab_size() const { return class_of_.size(); }
  std::size_t class_count() const { return members_.size(); }
  std::uint32_t class_of(WordId w) const { return class_of_.at(w); }
  /// Position of w inside its class.
  std::uint32_t slot_of(WordId w) const { return slot_of_.at(w); }
  const std::vector<WordId>& members(std::size_t c) const { return members_.at(c); }
  const std::vector<std::vector<WordId>>& all_members() const { return members_; }

  friend bool operator==(const ClassPartition& a, const ClassPartition& b) {
    return a.members_ == b.members_;
  }

 private:
  std::vector<std::vector<WordId>> members_;
  std::vector<std::uint32_t> class_of_;
  std::vector<std::uint32_t> slot_of_;
};

ClassPartition build_class_partition(std::size_t vocab_size);

}  // namespace docnade
