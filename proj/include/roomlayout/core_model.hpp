#pragma once

// Room-type taxonomy shared by every other module: the semantic label
// alphabet, the eleven cuboid room types, the three wall-count groups and
// the canonical keypoint id tables.
//
// Keypoint ids are 1-based slots of the group prototype (type 0 for A,
// type 5 for B, type 6 for C). Non-prototype types use a subset of those
// slots, so their id sequence may have gaps. When the ceiling (floor) is
// not visible, the junction slots of the vertical wall/wall edges are
// reused for the points where those edges leave through the top (bottom)
// image border.
//
//   Group A  1 ceiling junction left/center    2 ceiling junction center/right
//            3 floor junction left/center      4 floor junction center/right
//            5/6 ceiling border exits (l/r)    7/8 floor border exits (l/r)
//   Group B  1 ceiling junction                2 floor junction
//            3/4 ceiling border exits (l/r)    5/6 floor border exits (l/r)
//   Group C  1/2 ceiling line ends (l/r)       3/4 floor line ends (l/r)

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "roomlayout/error.hpp"

namespace roomlayout {

enum class SemanticLabel : std::uint8_t {
  Void = 0,
  Floor = 1,
  Ceiling = 2,
  LeftWall = 3,
  CenterWall = 4,
  RightWall = 5,
};

inline constexpr int kLabelCount = 6;  // including Void

constexpr std::uint8_t label_code(SemanticLabel l) { return static_cast<std::uint8_t>(l); }

inline std::string_view label_name(SemanticLabel l) {
  switch (l) {
    case SemanticLabel::Void: return "void";
    case SemanticLabel::Floor: return "floor";
    case SemanticLabel::Ceiling: return "ceiling";
    case SemanticLabel::LeftWall: return "left_wall";
    case SemanticLabel::CenterWall: return "center_wall";
    case SemanticLabel::RightWall: return "right_wall";
  }
  return "?";
}

enum class Group : std::uint8_t { A = 0, B = 1, C = 2 };

inline constexpr std::array<Group, 3> kAllGroups = {Group::A, Group::B, Group::C};

inline char group_tag(Group g) { return static_cast<char>('A' + static_cast<int>(g)); }

inline Group parse_group(std::string_view s) {
  if (s == "A") return Group::A;
  if (s == "B") return Group::B;
  if (s == "C") return Group::C;
  throw ValidationError("unknown hypothesis group '" + std::string(s) + "'");
}

struct RoomType {
  int id = 0;
  friend bool operator==(RoomType, RoomType) = default;
};

inline constexpr int kRoomTypeCount = 11;

struct GroupInfo {
  Group tag;
  int wall_count;
  RoomType prototype;
  int prototype_keypoint_count;
};

constexpr GroupInfo group_info(Group g) {
  switch (g) {
    case Group::A: return {Group::A, 3, RoomType{0}, 8};
    case Group::B: return {Group::B, 2, RoomType{5}, 6};
    case Group::C: return {Group::C, 1, RoomType{6}, 4};
  }
  return {Group::A, 3, RoomType{0}, 8};
}

enum class KeypointKind : std::uint8_t { CeilingJunction, FloorJunction, CeilingExit, FloorExit };
enum class Side : std::uint8_t { Left, Right, None };

struct KeypointRole {
  int id;
  KeypointKind kind;
  Side side;
};

namespace detail {

struct TypeEntry {
  Group group;
  bool floor;
  bool ceiling;
  std::uint8_t id_mask;  // bit (id-1) set when the id is present
};

// Indexed by room type id.
inline constexpr std::array<TypeEntry, kRoomTypeCount> kTypeTable = {{
    {Group::A, true, true, 0b11111111},   // 0: prototype A
    {Group::A, true, false, 0b11001111},  // 1: no ceiling -> {1,2,3,4,7,8}
    {Group::A, false, true, 0b00111111},  // 2: no floor   -> {1,2,3,4,5,6}
    {Group::B, true, false, 0b00110011},  // 3: {1,2,5,6}
    {Group::B, false, true, 0b00001111},  // 4: {1,2,3,4}
    {Group::B, true, true, 0b00111111},   // 5: prototype B
    {Group::C, true, true, 0b00001111},   // 6: prototype C
    {Group::A, false, false, 0b00001111}, // 7: walls only -> {1,2,3,4}
    {Group::C, false, true, 0b00000011},  // 8: ceiling line {1,2}
    {Group::C, true, false, 0b00001100},  // 9: floor line {3,4}
    {Group::B, false, false, 0b00000011}, // 10: vertical edge {1,2}
}};

inline const TypeEntry& entry(RoomType t) {
  if (t.id < 0 || t.id >= kRoomTypeCount)
    throw ValidationError("room type id " + std::to_string(t.id) + " out of range [0,10]");
  return kTypeTable[static_cast<std::size_t>(t.id)];
}

}  // namespace detail

inline Group group_of_type(RoomType t) { return detail::entry(t).group; }

inline bool type_has_floor(RoomType t) { return detail::entry(t).floor; }
inline bool type_has_ceiling(RoomType t) { return detail::entry(t).ceiling; }

/// Canonical, ascending keypoint ids of a room type in its group's
/// prototype numbering.
inline std::vector<int> keypoint_ids_of_type(RoomType t) {
  const auto mask = detail::entry(t).id_mask;
  std::vector<int> ids;
  for (int bit = 0; bit < 8; ++bit)
    if (mask & (1u << bit)) ids.push_back(bit + 1);
  return ids;
}

/// Room type realized by a group under the given floor/ceiling visibility.
/// Group C without floor and ceiling has no room type (it is a single wall
/// filling the whole image).
inline std::optional<RoomType> type_of_layout(Group g, bool floor_present, bool ceiling_present) {
  for (int id = 0; id < kRoomTypeCount; ++id) {
    const auto& e = detail::kTypeTable[static_cast<std::size_t>(id)];
    if (e.group == g && e.floor == floor_present && e.ceiling == ceiling_present) return RoomType{id};
  }
  return std::nullopt;
}

/// Ids a layout of group `g` needs under the given visibility flags.
inline std::vector<int> required_keypoint_ids(Group g, bool floor_present, bool ceiling_present) {
  if (auto t = type_of_layout(g, floor_present, ceiling_present)) return keypoint_ids_of_type(*t);
  return {};
}

enum class GroupBWallMapping : std::uint8_t { LeftCenter, CenterRight };

/// Wall labels of a group, ordered left to right in the image.
inline std::vector<SemanticLabel> wall_labels_of_group(
    Group g, GroupBWallMapping b_mapping = GroupBWallMapping::LeftCenter) {
  switch (g) {
    case Group::A:
      return {SemanticLabel::LeftWall, SemanticLabel::CenterWall, SemanticLabel::RightWall};
    case Group::B:
      if (b_mapping == GroupBWallMapping::CenterRight)
        return {SemanticLabel::CenterWall, SemanticLabel::RightWall};
      return {SemanticLabel::LeftWall, SemanticLabel::CenterWall};
    case Group::C:
      return {SemanticLabel::CenterWall};
  }
  return {};
}

inline KeypointRole keypoint_role(Group g, int id) {
  using K = KeypointKind;
  const int n = group_info(g).prototype_keypoint_count;
  if (id < 1 || id > n)
    throw ValidationError("keypoint id " + std::to_string(id) + " not in group " + group_tag(g) +
                          " prototype");
  switch (g) {
    case Group::A: {
      static constexpr std::array<KeypointRole, 8> roles = {{
          {1, K::CeilingJunction, Side::Left},
          {2, K::CeilingJunction, Side::Right},
          {3, K::FloorJunction, Side::Left},
          {4, K::FloorJunction, Side::Right},
          {5, K::CeilingExit, Side::Left},
          {6, K::CeilingExit, Side::Right},
          {7, K::FloorExit, Side::Left},
          {8, K::FloorExit, Side::Right},
      }};
      return roles[static_cast<std::size_t>(id - 1)];
    }
    case Group::B: {
      static constexpr std::array<KeypointRole, 6> roles = {{
          {1, K::CeilingJunction, Side::None},
          {2, K::FloorJunction, Side::None},
          {3, K::CeilingExit, Side::Left},
          {4, K::CeilingExit, Side::Right},
          {5, K::FloorExit, Side::Left},
          {6, K::FloorExit, Side::Right},
      }};
      return roles[static_cast<std::size_t>(id - 1)];
    }
    case Group::C: {
      static constexpr std::array<KeypointRole, 4> roles = {{
          {1, K::CeilingExit, Side::Left},
          {2, K::CeilingExit, Side::Right},
          {3, K::FloorExit, Side::Left},
          {4, K::FloorExit, Side::Right},
      }};
      return roles[static_cast<std::size_t>(id - 1)];
    }
  }
  throw ValidationError("invalid group");
}

}  // namespace roomlayout
