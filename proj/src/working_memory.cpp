// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#include "ccu/working_memory.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <unordered_map>

#include "ccu/error.hpp"

namespace ccu {

namespace {

std::string format_real(double value) {
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, end);
}

std::string escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string scalar_text(const Wme& wme) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return escape(v);
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(v);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_real(v);
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else {
          return "-";
        }
      },
      wme.value);
}

}  // namespace

std::string_view to_string(ValueKind kind) {
  switch (kind) {
    case ValueKind::node: return "node";
    case ValueKind::link: return "link";
    case ValueKind::string: return "string";
    case ValueKind::integer: return "int";
    case ValueKind::real: return "real";
    case ValueKind::boolean: return "bool";
  }
  return "?";
}

ValueKind Wme::kind() const {
  switch (value.index()) {
    case 0: return ValueKind::node;
    case 1: return ValueKind::string;
    case 2: return ValueKind::integer;
    case 3: return ValueKind::real;
    case 4: return ValueKind::boolean;
    default: return ValueKind::link;
  }
}

Datum Wme::datum() const {
  return std::visit(
      [this](const auto& v) -> Datum {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, NodeMarker>) {
          return id;
        } else if constexpr (std::is_same_v<T, Link>) {
          return v.target;
        } else {
          return v;
        }
      },
      value);
}

WorkingMemory::WorkingMemory() {
  Wme root;
  root.id = kRootId;
  root.attribute = "state";
  root.value = NodeMarker{};
  insert_raw(std::move(root));
}

const Wme* WorkingMemory::find(NodeId id) const {
  auto it = wmes_.find(id);
  return it == wmes_.end() ? nullptr : &it->second;
}

const Wme& WorkingMemory::get(NodeId id) const {
  if (const Wme* wme = find(id)) {
    return *wme;
  }
  throw Error(ErrorCode::UnknownId, "unknown element #" + std::to_string(raw(id)));
}

void WorkingMemory::require_node(NodeId parent) const {
  const Wme* p = find(parent);
  if (p == nullptr) {
    throw Error(ErrorCode::UnknownParent, "unknown parent #" + std::to_string(raw(parent)));
  }
  if (!p->is_node()) {
    throw Error(ErrorCode::UnknownParent,
                "parent #" + std::to_string(raw(parent)) + " is a scalar element, not a node");
  }
}

void WorkingMemory::insert_raw(Wme wme) {
  const NodeId id = wme.id;
  if (wme.parent) {
    children_[*wme.parent].insert(id);
  }
  if (const auto* link = std::get_if<Link>(&wme.value)) {
    inbound_links_[link->target].insert(id);
  }
  wmes_.emplace(id, std::move(wme));
}

void WorkingMemory::erase_raw(NodeId id) {
  auto it = wmes_.find(id);
  if (it == wmes_.end()) {
    return;
  }
  const Wme& wme = it->second;
  if (wme.parent) {
    auto c = children_.find(*wme.parent);
    if (c != children_.end()) {
      c->second.erase(id);
      if (c->second.empty()) {
        children_.erase(c);
      }
    }
  }
  if (const auto* link = std::get_if<Link>(&wme.value)) {
    auto in = inbound_links_.find(link->target);
    if (in != inbound_links_.end()) {
      in->second.erase(id);
      if (in->second.empty()) {
        inbound_links_.erase(in);
      }
    }
  }
  wmes_.erase(it);
}

NodeId WorkingMemory::add_node(NodeId parent, std::string attribute) {
  require_node(parent);
  Wme wme;
  wme.id = NodeId{next_id_++};
  wme.parent = parent;
  wme.attribute = std::move(attribute);
  wme.value = NodeMarker{};
  const NodeId id = wme.id;
  if (journal_) {
    journal_->entries.push_back({true, wme});
  }
  insert_raw(std::move(wme));
  ++modifications_;
  return id;
}

NodeId WorkingMemory::add_wme(NodeId parent, std::string attribute, Value value) {
  require_node(parent);
  Wme wme;
  wme.id = NodeId{0};
  wme.parent = parent;
  wme.attribute = std::move(attribute);
  std::visit(
      [&](auto&& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Link>) {
          const Wme* target = find(v.target);
          if (target == nullptr || !target->is_node()) {
            throw Error(ErrorCode::DanglingLink,
                        "link target #" + std::to_string(raw(v.target)) + " is not a node in memory");
          }
        }
        wme.value = std::move(v);
      },
      std::move(value));
  wme.id = NodeId{next_id_++};
  const NodeId id = wme.id;
  if (journal_) {
    journal_->entries.push_back({true, wme});
  }
  insert_raw(std::move(wme));
  ++modifications_;
  return id;
}

void WorkingMemory::remove_wme(NodeId id) {
  if (id == kRootId) {
    throw Error(ErrorCode::CannotRemoveRoot, "the state node cannot be removed");
  }
  if (!contains(id)) {
    throw Error(ErrorCode::UnknownId, "unknown element #" + std::to_string(raw(id)));
  }

  // Post-order over owned descendants so that undo re-inserts parents first.
  std::vector<NodeId> doomed;
  std::function<void(NodeId)> collect = [&](NodeId n) {
    if (auto c = children_.find(n); c != children_.end()) {
      for (NodeId child : c->second) {
        collect(child);
      }
    }
    doomed.push_back(n);
  };
  collect(id);

  std::set<NodeId> doomed_set(doomed.begin(), doomed.end());
  std::vector<NodeId> stale_links;
  for (NodeId n : doomed) {
    if (auto in = inbound_links_.find(n); in != inbound_links_.end()) {
      for (NodeId link : in->second) {
        if (!doomed_set.contains(link)) {
          stale_links.push_back(link);
        }
      }
    }
  }
  std::sort(stale_links.begin(), stale_links.end());
  stale_links.erase(std::unique(stale_links.begin(), stale_links.end()), stale_links.end());

  auto drop = [&](NodeId n) {
    if (journal_) {
      journal_->entries.push_back({false, wmes_.at(n)});
    }
    erase_raw(n);
  };
  for (NodeId link : stale_links) {
    drop(link);
  }
  for (NodeId n : doomed) {
    drop(n);
  }
  ++modifications_;
}

std::vector<NodeId> WorkingMemory::children(NodeId parent) const {
  auto c = children_.find(parent);
  if (c == children_.end()) {
    return {};
  }
  return {c->second.begin(), c->second.end()};
}

std::vector<const Wme*> WorkingMemory::children_with(NodeId parent, std::string_view attribute) const {
  std::vector<const Wme*> out;
  auto c = children_.find(parent);
  if (c == children_.end()) {
    return out;
  }
  for (NodeId child : c->second) {
    const Wme& wme = wmes_.at(child);
    if (wme.attribute == attribute) {
      out.push_back(&wme);
    }
  }
  return out;
}

std::optional<Datum> WorkingMemory::value_of(NodeId parent, std::string_view attribute) const {
  auto found = children_with(parent, attribute);
  if (found.empty()) {
    return std::nullopt;
  }
  return found.front()->datum();
}

std::vector<Datum> WorkingMemory::values_of(NodeId parent, std::string_view attribute) const {
  std::vector<Datum> out;
  for (const Wme* wme : children_with(parent, attribute)) {
    out.push_back(wme->datum());
  }
  return out;
}

std::optional<std::string> WorkingMemory::string_of(NodeId parent, std::string_view attribute) const {
  auto value = value_of(parent, attribute);
  if (value && std::holds_alternative<std::string>(*value)) {
    return std::get<std::string>(*value);
  }
  return std::nullopt;
}

std::optional<NodeId> WorkingMemory::node_of(NodeId parent, std::string_view attribute) const {
  auto value = value_of(parent, attribute);
  if (value && std::holds_alternative<NodeId>(*value)) {
    return std::get<NodeId>(*value);
  }
  return std::nullopt;
}

std::vector<std::string> WorkingMemory::validate() const {
  std::vector<std::string> problems;
  auto id_text = [](NodeId id) { return "#" + std::to_string(raw(id)); };

  const Wme* root_wme = find(kRootId);
  if (root_wme == nullptr || root_wme->parent || !root_wme->is_node()) {
    problems.push_back("missing or malformed state node");
  }
  std::size_t linked = 0;
  for (const auto& [id, wme] : wmes_) {
    if (id != wme.id) {
      problems.push_back("element table key mismatch at " + id_text(id));
    }
    if (id != kRootId) {
      if (!wme.parent) {
        problems.push_back(id_text(id) + " has no parent");
      } else {
        const Wme* parent = find(*wme.parent);
        if (parent == nullptr) {
          problems.push_back(id_text(id) + " has missing parent " + id_text(*wme.parent));
        } else if (!parent->is_node()) {
          problems.push_back(id_text(id) + " is owned by scalar " + id_text(*wme.parent));
        } else {
          auto c = children_.find(*wme.parent);
          if (c == children_.end() || !c->second.contains(id)) {
            problems.push_back(id_text(id) + " missing from child index");
          }
        }
      }
    }
    if (const auto* link = std::get_if<Link>(&wme.value)) {
      ++linked;
      const Wme* target = find(link->target);
      if (target == nullptr) {
        problems.push_back(id_text(id) + " dangles to " + id_text(link->target));
      } else if (!target->is_node()) {
        problems.push_back(id_text(id) + " links to scalar " + id_text(link->target));
      }
    }
  }
  std::size_t indexed_links = 0;
  for (const auto& [target, links] : inbound_links_) {
    indexed_links += links.size();
  }
  if (indexed_links != linked) {
    problems.push_back("link index out of sync");
  }
  std::size_t indexed_children = 0;
  for (const auto& [parent, kids] : children_) {
    indexed_children += kids.size();
  }
  if (indexed_children + 1 != wmes_.size()) {
    problems.push_back("child index out of sync");
  }
  return problems;
}

void WorkingMemory::begin() {
  journal_ = Journal{{}, next_id_, modifications_};
}

void WorkingMemory::commit() { journal_.reset(); }

void WorkingMemory::rollback() {
  if (!journal_) {
    return;
  }
  Journal journal = std::move(*journal_);
  journal_.reset();
  for (auto it = journal.entries.rbegin(); it != journal.entries.rend(); ++it) {
    if (it->added) {
      erase_raw(it->wme.id);
    } else {
      insert_raw(it->wme);
    }
  }
  next_id_ = journal.next_id;
  modifications_ = journal.modifications;
}

std::string to_text(const Datum& datum) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, NodeId>) {
          return "#" + std::to_string(raw(v));
        } else if constexpr (std::is_same_v<T, std::string>) {
          return v;
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(v);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_real(v);
        } else {
          return v ? "true" : "false";
        }
      },
      datum);
}

std::string snapshot(const WorkingMemory& memory) {
  const auto& elements = memory.elements();

  // Structural signature, blind to ids, used to order siblings canonically.
  std::unordered_map<std::uint64_t, std::string> signatures;
  std::function<const std::string&(NodeId)> signature = [&](NodeId id) -> const std::string& {
    if (auto it = signatures.find(raw(id)); it != signatures.end()) {
      return it->second;
    }
    const Wme& wme = elements.at(id);
    std::string sig = wme.attribute;
    sig += '\x1f';
    sig += to_string(wme.kind());
    sig += '\x1f';
    if (wme.is_node()) {
      std::vector<std::string> parts;
      for (NodeId child : memory.children(id)) {
        parts.push_back(signature(child));
      }
      std::sort(parts.begin(), parts.end());
      sig += '{';
      for (const auto& part : parts) {
        sig += part;
        sig += '\x1e';
      }
      sig += '}';
    } else if (!std::holds_alternative<Link>(wme.value)) {
      sig += scalar_text(wme);
    }
    return signatures.emplace(raw(id), std::move(sig)).first->second;
  };

  std::unordered_map<std::uint64_t, std::uint64_t> renumbered;
  std::vector<NodeId> order;
  std::function<void(NodeId)> visit = [&](NodeId id) {
    renumbered[raw(id)] = order.size();
    order.push_back(id);
    auto kids = memory.children(id);
    std::stable_sort(kids.begin(), kids.end(),
                     [&](NodeId a, NodeId b) { return signature(a) < signature(b); });
    for (NodeId child : kids) {
      visit(child);
    }
  };
  visit(memory.root());

  std::string out;
  for (NodeId id : order) {
    const Wme& wme = elements.at(id);
    out += std::to_string(renumbered.at(raw(id)));
    out += '\t';
    out += wme.parent ? std::to_string(renumbered.at(raw(*wme.parent))) : "-";
    out += '\t';
    out += escape(wme.attribute);
    out += '\t';
    out += to_string(wme.kind());
    out += '\t';
    if (const auto* link = std::get_if<Link>(&wme.value)) {
      out += std::to_string(renumbered.at(raw(link->target)));
    } else {
      out += scalar_text(wme);
    }
    out += '\n';
  }
  return out;
}

}  // namespace ccu
