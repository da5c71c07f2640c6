#pragma once

#include <optional>
#include <string_view>
#include <type_traits>
#include <vector>

#include "smr/crystalline_l.hpp"
#include "smr/crystalline_w.hpp"
#include "smr/ebr.hpp"
#include "smr/hyaline.hpp"

namespace smr {

enum class SchemeKind { kNone, kEbr, kHyaline1, kHyaline1S, kCrystallineL, kCrystallineW };

constexpr std::string_view scheme_name(SchemeKind k) {
  switch (k) {
    case SchemeKind::kNone: return "none";
    case SchemeKind::kEbr: return "ebr";
    case SchemeKind::kHyaline1: return "hyaline1";
    case SchemeKind::kHyaline1S: return "hyaline1s";
    case SchemeKind::kCrystallineL: return "crystalline-l";
    case SchemeKind::kCrystallineW: return "crystalline-w";
  }
  return "?";
}

// Crystalline-W needs a double-width CAS; without one only Crystalline-L
// is offered among the Crystalline schemes.
constexpr bool scheme_available(SchemeKind k) {
  return k != SchemeKind::kCrystallineW || SMR_HAS_DCAS;
}

inline std::vector<SchemeKind> available_schemes() {
  std::vector<SchemeKind> out;
  for (SchemeKind k : {SchemeKind::kNone, SchemeKind::kEbr, SchemeKind::kHyaline1,
                       SchemeKind::kHyaline1S, SchemeKind::kCrystallineL,
                       SchemeKind::kCrystallineW}) {
    if (scheme_available(k)) out.push_back(k);
  }
  return out;
}

inline std::optional<SchemeKind> parse_scheme(std::string_view s) {
  for (SchemeKind k : available_schemes()) {
    if (scheme_name(k) == s) return k;
  }
  return std::nullopt;
}

// Calls f(std::type_identity<Scheme>{}) with the scheme type for k.
template <class Hook = NoHook, class F>
decltype(auto) dispatch_scheme(SchemeKind k, F&& f) {
  switch (k) {
    case SchemeKind::kNone: return f(std::type_identity<NoReclaim<Hook>>{});
    case SchemeKind::kEbr: return f(std::type_identity<Ebr<Hook>>{});
    case SchemeKind::kHyaline1: return f(std::type_identity<Hyaline1<Hook>>{});
    case SchemeKind::kHyaline1S: return f(std::type_identity<Hyaline1S<Hook>>{});
    case SchemeKind::kCrystallineL: return f(std::type_identity<CrystallineL<Hook>>{});
    case SchemeKind::kCrystallineW:
#if SMR_HAS_DCAS
      return f(std::type_identity<CrystallineW<Hook>>{});
#else
      break;
#endif
  }
  throw ConfigError("scheme not available on this target");
}

static_assert(Reclaimer<NoReclaim<>>);
static_assert(Reclaimer<Ebr<>>);
static_assert(Reclaimer<Hyaline1<>>);
static_assert(Reclaimer<Hyaline1S<>>);
static_assert(Reclaimer<CrystallineL<>>);
#if SMR_HAS_DCAS
static_assert(Reclaimer<CrystallineW<>>);
#endif

}  // namespace smr
