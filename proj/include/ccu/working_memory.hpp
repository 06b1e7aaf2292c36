// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ccu {

/// Identifier of a working-memory element. Every element is addressable; only
/// elements of kind `node` can own children.
enum class NodeId : std::uint64_t {};

inline constexpr NodeId kRootId{0};

constexpr std::uint64_t raw(NodeId id) noexcept { return static_cast<std::uint64_t>(id); }

struct Link {
  NodeId target;
  friend bool operator==(const Link&, const Link&) = default;
};

/// Value accepted by `add_wme`: a scalar or a link to an existing node.
using Value = std::variant<std::string, std::int64_t, double, bool, Link>;

/// What a pattern sees when it reads an element's value. Node elements and
/// links both surface as the node they denote.
using Datum = std::variant<NodeId, std::string, std::int64_t, double, bool>;

enum class ValueKind { node, link, string, integer, real, boolean };

std::string_view to_string(ValueKind kind);

struct NodeMarker {
  friend bool operator==(const NodeMarker&, const NodeMarker&) = default;
};

struct Wme {
  NodeId id{};
  std::optional<NodeId> parent;  // empty only for the root
  std::string attribute;
  std::variant<NodeMarker, std::string, std::int64_t, double, bool, Link> value;

  ValueKind kind() const;
  bool is_node() const { return std::holds_alternative<NodeMarker>(value); }
  Datum datum() const;
};

/// Attributed graph holding the current situation. The root is the state node.
///
/// Ownership follows the creation-time parent: removing an element removes the
/// subtree it owns plus every link that pointed into that subtree.
///
/// Not thread-safe. One deliberation agent mutates an instance; other readers
/// must only look at it between decision cycles.
class WorkingMemory {
 public:
  WorkingMemory();

  NodeId root() const noexcept { return kRootId; }

  /// Adds a structural child node and returns its id.
  NodeId add_node(NodeId parent, std::string attribute);
  NodeId add_wme(NodeId parent, std::string attribute, Value value);
  void remove_wme(NodeId id);

  bool contains(NodeId id) const { return wmes_.contains(id); }
  const Wme* find(NodeId id) const;
  const Wme& get(NodeId id) const;

  /// Children in insertion order.
  std::vector<NodeId> children(NodeId parent) const;
  std::vector<const Wme*> children_with(NodeId parent, std::string_view attribute) const;
  std::optional<Datum> value_of(NodeId parent, std::string_view attribute) const;
  std::vector<Datum> values_of(NodeId parent, std::string_view attribute) const;
  std::optional<std::string> string_of(NodeId parent, std::string_view attribute) const;
  std::optional<NodeId> node_of(NodeId parent, std::string_view attribute) const;

  const std::map<NodeId, Wme>& elements() const noexcept { return wmes_; }
  std::size_t size() const noexcept { return wmes_.size(); }
  std::uint64_t modification_count() const noexcept { return modifications_; }

  /// Structural validator: parents exist and are nodes, links resolve, indices
  /// agree with the element table. Returns human-readable violations.
  std::vector<std::string> validate() const;

  // Transactions. Edits made between begin() and rollback() are undone
  // exactly, including id allocation and the modification counter.
  void begin();
  void commit();
  void rollback();
  bool in_transaction() const noexcept { return journal_.has_value(); }

 private:
  struct Journal {
    struct Entry {
      bool added;
      Wme wme;
    };
    std::vector<Entry> entries;
    std::uint64_t next_id;
    std::uint64_t modifications;
  };

  void insert_raw(Wme wme);
  void erase_raw(NodeId id);
  void require_node(NodeId parent) const;

  std::map<NodeId, Wme> wmes_;
  std::map<NodeId, std::set<NodeId>> children_;
  std::map<NodeId, std::set<NodeId>> inbound_links_;
  std::uint64_t next_id_ = 1;
  std::uint64_t modifications_ = 0;
  std::optional<Journal> journal_;
};

/// Canonical text form: one element per line,
/// `id<TAB>parent<TAB>attribute<TAB>kind<TAB>value`, ids renumbered depth-first
/// over children ordered by structural signature, LF line endings.
std::string snapshot(const WorkingMemory& memory);

/// Display form of a datum (`#12` for nodes).
std::string to_text(const Datum& datum);

}  // namespace ccu
