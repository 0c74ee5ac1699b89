#pragma once

#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bts/ast.hpp"
#include "bts/geometry.hpp"

namespace bts {

struct JunctionRec {
    std::string id;
    std::string type; // "+", "T", "X", "Y", "unknown"
    std::vector<std::string> road_ids;
};

struct RoadRec {
    std::string id;
    std::string kind;
    std::vector<std::string> lane_ids;
    int lane_total_number = 0;
};

struct LaneRec {
    std::string id;
    std::vector<Vec2> centerline;
    double width = 3.5;
    int heading_direction = +1; // +1: travel along the polyline, -1: against it
    std::optional<std::string> left_neighbor;  // relative to the lane's travel direction
    std::optional<std::string> right_neighbor;
    std::string road_id;
};

// Geometry-inert map object of one of the remaining kinds (crosswalk, signal, ...).
struct MapObjectRec {
    MapObjectKind kind = MapObjectKind::Overlap;
    std::string id;
    std::map<std::string, std::string> attributes;
};

struct MapGraph {
    std::string name;
    std::vector<JunctionRec> junctions;
    std::vector<RoadRec> roads;
    std::vector<LaneRec> lanes;
    std::vector<MapObjectRec> objects;
    std::map<std::string, std::string> metadata;

    const LaneRec* find_lane(const std::string& id) const;
    const RoadRec* find_road(const std::string& id) const;
    const JunctionRec* find_junction(const std::string& id) const;

    bool operator==(const MapGraph&) const;
};

bool is_junction_type(const std::string& type);

class MapFormatError : public std::runtime_error {
public:
    MapFormatError(std::string field, const std::string& msg)
        : std::runtime_error(field + ": " + msg), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

class UnknownMapKind : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Checks every referential and geometric invariant; throws MapFormatError.
void check_map(const MapGraph& map);

MapGraph map_from_json(const nlohmann::json& j);
nlohmann::json map_to_json(const MapGraph& map);
MapGraph load_map(const std::string& path);
void save_map(const MapGraph& map, const std::string& path);

// Straight road along +x. Kinds: two_lane_two_way, two_lane_one_way, four_lane_two_way.
MapGraph generate_map(const std::string& kind, double length, double lane_width);

// Generator kind named by a bare string constraint on a Road declaration, e.g. `Road r with "two_lane_one_way"`.
std::optional<std::string> map_kind_hint(const std::vector<MapDecl>& decls);

// Map object name (from the scenario's map block) -> map object id.
struct MapBindings {
    std::map<std::string, std::string> ids;
    std::map<std::string, MapObjectKind> kinds;
};

class NoMatch : public std::runtime_error {
public:
    NoMatch(std::string decl, const std::string& msg)
        : std::runtime_error("no map object matches '" + decl + "': " + msg), decl_(std::move(decl)) {}
    const std::string& decl() const { return decl_; }

private:
    std::string decl_;
};

// Binds each declaration to the first satisfying object in stable id order.
MapBindings match_map_objects(const std::vector<MapDecl>& decls, const MapGraph& map);

struct LanePose {
    Pose pose;
    bool clamped = false;
};

double lane_length(const LaneRec& lane);

// Pose at arc length `s` along the stored polyline; heading is the segment direction.
LanePose lane_pose(const LaneRec& lane, double s);

// Heading of travel on the lane at arc length `s`.
double lane_travel_heading(const LaneRec& lane, double s);

struct LaneProjection {
    double s = 0.0;       // arc length along the stored polyline
    double lateral = 0.0; // signed offset, positive to the left of the polyline direction
    double distance = 0.0;
};

LaneProjection project_onto_lane(const LaneRec& lane, Vec2 p);

// Nearest lane by absolute lateral distance; ties keep the first lane.
const LaneRec* nearest_lane(const MapGraph& map, Vec2 p);

// Nearest lane whose travel direction agrees with `heading` (falls back to the nearest lane).
const LaneRec* lane_for_pose(const MapGraph& map, const Pose& pose);

// Lane the actor is travelling in when it moves with `heading`, i.e. `direction`
// is resolved relative to the actor's direction of travel.
const LaneRec* neighbor_lane(const MapGraph& map, const LaneRec& lane, double heading, const std::string& direction);

// Polyline of the lane ordered in the direction the actor with `heading` travels.
std::vector<Vec2> travel_path(const LaneRec& lane, double heading);

class PositionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Resolves a declared position. `placed` holds the poses of already-placed actors.
Pose resolve_position(const PositionSpec& spec, const MapGraph& map, const MapBindings& bindings,
                      const std::map<std::string, Pose>& placed, std::mt19937_64& rng);

} // namespace bts
