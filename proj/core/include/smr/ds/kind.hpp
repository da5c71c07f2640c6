#pragma once

#include <optional>
#include <string_view>

namespace smr::ds {

enum class DsKind { kStack, kList, kHashMap };

constexpr std::string_view ds_name(DsKind k) {
  switch (k) {
    case DsKind::kStack: return "stack";
    case DsKind::kList: return "list";
    case DsKind::kHashMap: return "hashmap";
  }
  return "?";
}

inline std::optional<DsKind> parse_ds(std::string_view s) {
  for (DsKind k : {DsKind::kStack, DsKind::kList, DsKind::kHashMap}) {
    if (ds_name(k) == s) return k;
  }
  return std::nullopt;
}

// Reservation indices each structure needs per operation.
constexpr int ds_indices(DsKind k) { return k == DsKind::kStack ? 1 : 3; }

}  // namespace smr::ds
