#include "bts/map.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <variant>

namespace bts {

using nlohmann::json;

const LaneRec* MapGraph::find_lane(const std::string& id) const {
    for (const auto& l : lanes)
        if (l.id == id) return &l;
    return nullptr;
}

const RoadRec* MapGraph::find_road(const std::string& id) const {
    for (const auto& r : roads)
        if (r.id == id) return &r;
    return nullptr;
}

const JunctionRec* MapGraph::find_junction(const std::string& id) const {
    for (const auto& j : junctions)
        if (j.id == id) return &j;
    return nullptr;
}

bool MapGraph::operator==(const MapGraph& o) const { return map_to_json(*this) == map_to_json(o); }

bool is_junction_type(const std::string& type) {
    return type == "+" || type == "T" || type == "X" || type == "Y" || type == "unknown";
}

void check_map(const MapGraph& map) {
    std::set<std::string> lane_ids;
    for (std::size_t i = 0; i < map.lanes.size(); ++i) {
        const auto& lane = map.lanes[i];
        std::string at = "lanes[" + std::to_string(i) + "]";
        if (lane.id.empty()) throw MapFormatError(at + ".id", "lane id must not be empty");
        if (!lane_ids.insert(lane.id).second) throw MapFormatError(at + ".id", "duplicate lane id '" + lane.id + "'");
        if (lane.centerline.size() < 2) throw MapFormatError(at + ".centerline", "needs at least two points");
        if (!(lane.width > 0.0)) throw MapFormatError(at + ".width", "must be positive");
        if (lane.heading_direction != 1 && lane.heading_direction != -1)
            throw MapFormatError(at + ".heading_direction", "must be +1 or -1");
    }
    for (std::size_t i = 0; i < map.lanes.size(); ++i) {
        const auto& lane = map.lanes[i];
        std::string at = "lanes[" + std::to_string(i) + "]";
        if (lane.left_neighbor && !lane_ids.count(*lane.left_neighbor))
            throw MapFormatError(at + ".left_neighbor", "unknown lane '" + *lane.left_neighbor + "'");
        if (lane.right_neighbor && !lane_ids.count(*lane.right_neighbor))
            throw MapFormatError(at + ".right_neighbor", "unknown lane '" + *lane.right_neighbor + "'");
    }
    // A.left == B implies B.right == A for same-direction lanes and B.left == A for opposing lanes.
    for (std::size_t i = 0; i < map.lanes.size(); ++i) {
        const auto& lane = map.lanes[i];
        std::string at = "lanes[" + std::to_string(i) + "]";
        auto check = [&](const std::optional<std::string>& link, bool is_left) {
            if (!link) return;
            const LaneRec* other = map.find_lane(*link);
            bool same = other->heading_direction == lane.heading_direction;
            const auto& back = (same == is_left) ? other->right_neighbor : other->left_neighbor;
            if (!back || *back != lane.id)
                throw MapFormatError(at + (is_left ? ".left_neighbor" : ".right_neighbor"),
                                     "neighbor link to '" + *link + "' is not symmetric");
        };
        check(lane.left_neighbor, true);
        check(lane.right_neighbor, false);
    }
    std::set<std::string> road_ids;
    std::set<std::string> owned_lanes;
    for (std::size_t i = 0; i < map.roads.size(); ++i) {
        const auto& road = map.roads[i];
        std::string at = "roads[" + std::to_string(i) + "]";
        if (!road_ids.insert(road.id).second) throw MapFormatError(at + ".id", "duplicate road id '" + road.id + "'");
        for (std::size_t k = 0; k < road.lane_ids.size(); ++k) {
            const auto& id = road.lane_ids[k];
            std::string lat = at + ".lane_ids[" + std::to_string(k) + "]";
            if (!lane_ids.count(id)) throw MapFormatError(lat, "unknown lane '" + id + "'");
            if (!owned_lanes.insert(id).second) throw MapFormatError(lat, "lane '" + id + "' belongs to two roads");
        }
        if (road.lane_total_number != static_cast<int>(road.lane_ids.size()))
            throw MapFormatError(at + ".lane_total_number", "does not equal the number of lane ids");
    }
    std::set<std::string> junction_ids;
    for (std::size_t i = 0; i < map.junctions.size(); ++i) {
        const auto& j = map.junctions[i];
        std::string at = "junctions[" + std::to_string(i) + "]";
        if (!junction_ids.insert(j.id).second) throw MapFormatError(at + ".id", "duplicate junction id '" + j.id + "'");
        if (!is_junction_type(j.type)) throw MapFormatError(at + ".type", "unknown junction type '" + j.type + "'");
        for (std::size_t k = 0; k < j.road_ids.size(); ++k)
            if (!road_ids.count(j.road_ids[k]))
                throw MapFormatError(at + ".road_ids[" + std::to_string(k) + "]", "unknown road '" + j.road_ids[k] + "'");
    }
}

namespace {

template <typename T>
T field(const json& j, const char* key, const std::string& at) {
    if (!j.contains(key)) throw MapFormatError(at + "." + key, "missing field");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw MapFormatError(at + "." + key, e.what());
    }
}

std::optional<std::string> opt_string(const json& j, const char* key, const std::string& at) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    if (!j.at(key).is_string()) throw MapFormatError(at + "." + key, "must be a string or null");
    return j.at(key).get<std::string>();
}

const json& array_or_empty(const json& j, const char* key) {
    static const json empty = json::array();
    if (!j.contains(key)) return empty;
    if (!j.at(key).is_array()) throw MapFormatError(key, "must be an array");
    return j.at(key);
}

} // namespace

MapGraph map_from_json(const json& j) {
    if (!j.is_object()) throw MapFormatError("$", "map file must be a JSON object");
    MapGraph m;
    m.name = j.value("name", std::string{});
    if (j.contains("metadata")) {
        try {
            m.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
        } catch (const json::exception& e) {
            throw MapFormatError("metadata", e.what());
        }
    }
    const json& lanes = array_or_empty(j, "lanes");
    for (std::size_t i = 0; i < lanes.size(); ++i) {
        std::string at = "lanes[" + std::to_string(i) + "]";
        const json& l = lanes[i];
        LaneRec lane;
        lane.id = field<std::string>(l, "id", at);
        auto pts = field<std::vector<std::vector<double>>>(l, "centerline", at);
        for (std::size_t k = 0; k < pts.size(); ++k) {
            if (pts[k].size() != 2) throw MapFormatError(at + ".centerline[" + std::to_string(k) + "]", "expected [x, y]");
            lane.centerline.push_back({pts[k][0], pts[k][1]});
        }
        lane.width = field<double>(l, "width", at);
        lane.heading_direction = l.contains("heading_direction") ? field<int>(l, "heading_direction", at) : 1;
        lane.left_neighbor = opt_string(l, "left_neighbor", at);
        lane.right_neighbor = opt_string(l, "right_neighbor", at);
        m.lanes.push_back(std::move(lane));
    }
    const json& roads = array_or_empty(j, "roads");
    for (std::size_t i = 0; i < roads.size(); ++i) {
        std::string at = "roads[" + std::to_string(i) + "]";
        const json& r = roads[i];
        RoadRec road;
        road.id = field<std::string>(r, "id", at);
        road.kind = r.value("kind", std::string{});
        road.lane_ids = field<std::vector<std::string>>(r, "lane_ids", at);
        road.lane_total_number = r.contains("lane_total_number") ? field<int>(r, "lane_total_number", at)
                                                                  : static_cast<int>(road.lane_ids.size());
        m.roads.push_back(std::move(road));
    }
    const json& junctions = array_or_empty(j, "junctions");
    for (std::size_t i = 0; i < junctions.size(); ++i) {
        std::string at = "junctions[" + std::to_string(i) + "]";
        const json& jj = junctions[i];
        JunctionRec junction;
        junction.id = field<std::string>(jj, "id", at);
        junction.type = jj.value("type", std::string{"unknown"});
        junction.road_ids = jj.contains("road_ids") ? field<std::vector<std::string>>(jj, "road_ids", at)
                                                    : std::vector<std::string>{};
        m.junctions.push_back(std::move(junction));
    }
    const json& objects = array_or_empty(j, "objects");
    for (std::size_t i = 0; i < objects.size(); ++i) {
        std::string at = "objects[" + std::to_string(i) + "]";
        const json& o = objects[i];
        MapObjectRec obj;
        auto kind = map_object_kind_from(field<std::string>(o, "kind", at));
        if (!kind || *kind == MapObjectKind::Junction || *kind == MapObjectKind::Road || *kind == MapObjectKind::Lane)
            throw MapFormatError(at + ".kind", "not a generic map object kind");
        obj.kind = *kind;
        obj.id = field<std::string>(o, "id", at);
        if (o.contains("attributes")) obj.attributes = field<std::map<std::string, std::string>>(o, "attributes", at);
        m.objects.push_back(std::move(obj));
    }
    check_map(m);
    for (const auto& road : m.roads)
        for (const auto& id : road.lane_ids)
            for (auto& lane : m.lanes)
                if (lane.id == id) lane.road_id = road.id;
    return m;
}

json map_to_json(const MapGraph& map) {
    json j;
    j["name"] = map.name;
    if (!map.metadata.empty()) j["metadata"] = map.metadata;
    j["junctions"] = json::array();
    for (const auto& jn : map.junctions)
        j["junctions"].push_back({{"id", jn.id}, {"type", jn.type}, {"road_ids", jn.road_ids}});
    j["roads"] = json::array();
    for (const auto& r : map.roads)
        j["roads"].push_back(
            {{"id", r.id}, {"kind", r.kind}, {"lane_ids", r.lane_ids}, {"lane_total_number", r.lane_total_number}});
    j["lanes"] = json::array();
    for (const auto& l : map.lanes) {
        json pts = json::array();
        for (const auto& p : l.centerline) pts.push_back({p.x, p.y});
        json lj = {{"id", l.id}, {"centerline", pts}, {"width", l.width}, {"heading_direction", l.heading_direction}};
        lj["left_neighbor"] = l.left_neighbor ? json(*l.left_neighbor) : json(nullptr);
        lj["right_neighbor"] = l.right_neighbor ? json(*l.right_neighbor) : json(nullptr);
        j["lanes"].push_back(std::move(lj));
    }
    if (!map.objects.empty()) {
        j["objects"] = json::array();
        for (const auto& o : map.objects)
            j["objects"].push_back({{"kind", to_string(o.kind)}, {"id", o.id}, {"attributes", o.attributes}});
    }
    return j;
}

MapGraph load_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MapFormatError(path, "cannot open map file");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw MapFormatError("$", std::string("invalid JSON: ") + e.what());
    }
    return map_from_json(j);
}

void save_map(const MapGraph& map, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write map file " + path);
    out << map_to_json(map).dump(2) << '\n';
}

MapGraph generate_map(const std::string& kind, double length, double lane_width) {
    struct LaneSpec {
        int direction;
    };
    std::vector<LaneSpec> specs;
    if (kind == "two_lane_two_way") {
        specs = {{+1}, {-1}};
    } else if (kind == "two_lane_one_way") {
        specs = {{+1}, {+1}};
    } else if (kind == "four_lane_two_way") {
        specs = {{+1}, {+1}, {-1}, {-1}};
    } else {
        throw UnknownMapKind("unknown map kind '" + kind + "'");
    }
    if (!(length > 0.0)) throw std::invalid_argument("map length must be positive");
    if (!(lane_width > 0.0)) throw std::invalid_argument("lane width must be positive");

    MapGraph m;
    m.name = kind;
    RoadRec road;
    road.id = "road_0";
    road.kind = kind;
    const int n = static_cast<int>(specs.size());
    const int samples = std::max(2, static_cast<int>(std::ceil(length / 50.0)) + 1);
    for (int i = 0; i < n; ++i) {
        LaneRec lane;
        lane.id = "lane_" + std::to_string(i);
        lane.width = lane_width;
        lane.heading_direction = specs[static_cast<std::size_t>(i)].direction;
        lane.road_id = road.id;
        double y = lane_width * i;
        for (int k = 0; k < samples; ++k) lane.centerline.push_back({length * k / (samples - 1), y});
        road.lane_ids.push_back(lane.id);
        m.lanes.push_back(std::move(lane));
    }
    // Lanes are stacked towards +y; +y is left of +x travel and right of -x travel.
    for (int i = 0; i < n; ++i) {
        auto& lane = m.lanes[static_cast<std::size_t>(i)];
        std::optional<std::string> up = i + 1 < n ? std::optional(m.lanes[static_cast<std::size_t>(i + 1)].id) : std::nullopt;
        std::optional<std::string> down = i > 0 ? std::optional(m.lanes[static_cast<std::size_t>(i - 1)].id) : std::nullopt;
        if (lane.heading_direction > 0) {
            lane.left_neighbor = up;
            lane.right_neighbor = down;
        } else {
            lane.left_neighbor = down;
            lane.right_neighbor = up;
        }
    }
    road.lane_total_number = n;
    m.roads.push_back(std::move(road));
    check_map(m);
    return m;
}

namespace {

using AttrValue = std::variant<std::monostate, std::string, double>;

struct ObjectRef {
    enum class Kind { Junction, Road, Lane, Generic } kind;
    const void* ptr;
};

AttrValue resolve_path(const MapGraph& map, ObjectRef obj, const std::vector<PathSegment>& path, std::size_t i) {
    if (i >= path.size()) return {};
    const PathSegment& seg = path[i];
    bool last = i + 1 == path.size();
    auto pick = [&](const std::vector<std::string>& ids) -> std::optional<std::string> {
        if (!seg.index) return std::nullopt;
        int k = *seg.index - 1; // 1-based like the scenario language
        if (k < 0 || k >= static_cast<int>(ids.size())) return std::nullopt;
        return ids[static_cast<std::size_t>(k)];
    };
    switch (obj.kind) {
    case ObjectRef::Kind::Junction: {
        const auto& j = *static_cast<const JunctionRec*>(obj.ptr);
        if (seg.name == "roads") {
            auto id = pick(j.road_ids);
            if (!id) return {};
            if (const RoadRec* r = map.find_road(*id)) return resolve_path(map, {ObjectRef::Kind::Road, r}, path, i + 1);
            return {};
        }
        if (!last) return {};
        if (seg.name == "type" || seg.name == "kind") return j.type;
        if (seg.name == "id") return j.id;
        if (seg.name == "road_total_number") return static_cast<double>(j.road_ids.size());
        return {};
    }
    case ObjectRef::Kind::Road: {
        const auto& r = *static_cast<const RoadRec*>(obj.ptr);
        if (seg.name == "lanes") {
            auto id = pick(r.lane_ids);
            if (!id) return {};
            if (const LaneRec* l = map.find_lane(*id)) return resolve_path(map, {ObjectRef::Kind::Lane, l}, path, i + 1);
            return {};
        }
        if (!last) return {};
        if (seg.name == "kind" || seg.name == "type") return r.kind;
        if (seg.name == "id") return r.id;
        if (seg.name == "lane_total_number") return static_cast<double>(r.lane_total_number);
        return {};
    }
    case ObjectRef::Kind::Lane: {
        const auto& l = *static_cast<const LaneRec*>(obj.ptr);
        if (!last) return {};
        if (seg.name == "id") return l.id;
        if (seg.name == "width") return l.width;
        if (seg.name == "heading_direction") return static_cast<double>(l.heading_direction);
        if (seg.name == "length") return lane_length(l);
        if (seg.name == "road") return l.road_id;
        return {};
    }
    case ObjectRef::Kind::Generic: {
        const auto& o = *static_cast<const MapObjectRec*>(obj.ptr);
        if (!last) return {};
        if (seg.name == "id") return o.id;
        auto it = o.attributes.find(seg.name);
        if (it == o.attributes.end()) return {};
        char* end = nullptr;
        double v = std::strtod(it->second.c_str(), &end);
        if (end && *end == '\0' && !it->second.empty()) return v;
        return it->second;
    }
    }
    return {};
}

bool satisfies(const MapGraph& map, ObjectRef obj, const std::string& decl_name, const ConstraintExpr& c) {
    std::vector<PathSegment> path = c.path;
    if (path.size() > 1 && path.front().name == decl_name && !path.front().index) path.erase(path.begin());
    AttrValue v = resolve_path(map, obj, path, 0);
    bool equal = false;
    if (std::holds_alternative<std::string>(v)) {
        const auto& s = std::get<std::string>(v);
        if (c.value.kind == Literal::Kind::Text || c.value.kind == Literal::Kind::Identifier) equal = s == c.value.text;
    } else if (std::holds_alternative<double>(v)) {
        if (c.value.kind == Literal::Kind::Number) equal = std::abs(std::get<double>(v) - c.value.number) <= 1e-9;
    } else {
        return false; // unresolved path never satisfies, even for !=
    }
    return c.op == CompareOp::Eq ? equal : !equal;
}

std::string describe(const ConstraintExpr& c) {
    if (c.bare_text) return "\"" + c.value.text + "\"";
    std::string s;
    for (std::size_t i = 0; i < c.path.size(); ++i) {
        s += (i ? "." : "") + c.path[i].name;
        if (c.path[i].index) s += "[" + std::to_string(*c.path[i].index) + "]";
    }
    s += std::string(" ") + to_string(c.op) + " ";
    switch (c.value.kind) {
    case Literal::Kind::Text: s += "\"" + c.value.text + "\""; break;
    case Literal::Kind::Number: {
        std::ostringstream os;
        os << c.value.number;
        s += os.str();
        break;
    }
    default: s += c.value.text; break;
    }
    return s;
}

} // namespace

std::optional<std::string> map_kind_hint(const std::vector<MapDecl>& decls) {
    for (const auto& d : decls) {
        if (d.kind != MapObjectKind::Road) continue;
        for (const auto& c : d.constraints)
            if (c.bare_text) return c.value.text;
    }
    return std::nullopt;
}

MapBindings match_map_objects(const std::vector<MapDecl>& decls, const MapGraph& map) {
    MapBindings out;
    for (const auto& decl : decls) {
        std::vector<std::pair<ObjectRef, std::string>> candidates;
        switch (decl.kind) {
        case MapObjectKind::Junction:
            for (const auto& j : map.junctions) candidates.push_back({{ObjectRef::Kind::Junction, &j}, j.id});
            break;
        case MapObjectKind::Road:
            for (const auto& r : map.roads) candidates.push_back({{ObjectRef::Kind::Road, &r}, r.id});
            break;
        case MapObjectKind::Lane:
            for (const auto& l : map.lanes) candidates.push_back({{ObjectRef::Kind::Lane, &l}, l.id});
            break;
        default:
            for (const auto& o : map.objects)
                if (o.kind == decl.kind) candidates.push_back({{ObjectRef::Kind::Generic, &o}, o.id});
            break;
        }
        if (candidates.empty())
            throw NoMatch(decl.name, std::string("the map has no ") + to_string(decl.kind) + " objects");
        const ConstraintExpr* failed = nullptr;
        bool bound = false;
        for (const auto& [ref, id] : candidates) {
            failed = nullptr;
            for (const auto& c : decl.constraints) {
                if (!satisfies(map, ref, decl.name, c)) {
                    failed = &c;
                    break;
                }
            }
            if (!failed) {
                out.ids[decl.name] = id;
                out.kinds[decl.name] = decl.kind;
                bound = true;
                break;
            }
        }
        if (!bound) throw NoMatch(decl.name, "constraint " + describe(*failed) + " is not satisfied by any " + to_string(decl.kind));
    }
    return out;
}

double lane_length(const LaneRec& lane) { return polyline_length(lane.centerline); }

LanePose lane_pose(const LaneRec& lane, double s) {
    LanePose out;
    const auto& pts = lane.centerline;
    double total = lane_length(lane);
    if (s < 0.0) {
        s = 0.0;
        out.clamped = true;
    } else if (s > total) {
        s = total;
        out.clamped = true;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        Vec2 d = pts[i + 1] - pts[i];
        double len = d.norm();
        bool last = i + 2 == pts.size();
        if (s <= acc + len || last) {
            double t = len > 0.0 ? std::clamp((s - acc) / len, 0.0, 1.0) : 0.0;
            Vec2 p = pts[i] + d * t;
            out.pose = {p.x, p.y, std::atan2(d.y, d.x)};
            return out;
        }
        acc += len;
    }
    out.pose = {pts.front().x, pts.front().y, 0.0};
    return out;
}

double lane_travel_heading(const LaneRec& lane, double s) {
    double h = lane_pose(lane, s).pose.heading;
    return lane.heading_direction > 0 ? h : normalize_angle(h + std::numbers::pi);
}

LaneProjection project_onto_lane(const LaneRec& lane, Vec2 p) {
    auto proj = project_onto_polyline(lane.centerline, p);
    return {proj.s, proj.lateral, proj.distance};
}

const LaneRec* nearest_lane(const MapGraph& map, Vec2 p) {
    const LaneRec* best = nullptr;
    double best_d = 0.0;
    for (const auto& l : map.lanes) {
        double d = project_onto_lane(l, p).distance;
        if (!best || d < best_d - 1e-12) {
            best = &l;
            best_d = d;
        }
    }
    return best;
}

const LaneRec* lane_for_pose(const MapGraph& map, const Pose& pose) {
    const LaneRec* best = nullptr;
    double best_d = 0.0;
    for (const auto& l : map.lanes) {
        auto proj = project_onto_lane(l, pose.position());
        double travel = lane_travel_heading(l, proj.s);
        if (std::cos(normalize_angle(travel - pose.heading)) <= 0.0) continue;
        if (!best || proj.distance < best_d - 1e-12) {
            best = &l;
            best_d = proj.distance;
        }
    }
    return best ? best : nearest_lane(map, pose.position());
}

const LaneRec* neighbor_lane(const MapGraph& map, const LaneRec& lane, double heading, const std::string& direction) {
    // Actor moving against the lane's travel direction sees left and right swapped.
    double travel = lane_travel_heading(lane, 0.0);
    bool with_lane = std::cos(normalize_angle(travel - heading)) >= 0.0;
    bool left = direction == "left";
    const auto& link = (left == with_lane) ? lane.left_neighbor : lane.right_neighbor;
    if (!link) return nullptr;
    return map.find_lane(*link);
}

std::vector<Vec2> travel_path(const LaneRec& lane, double heading) {
    std::vector<Vec2> pts = lane.centerline;
    Vec2 d = pts.back() - pts.front();
    if (std::cos(normalize_angle(std::atan2(d.y, d.x) - heading)) < 0.0) std::reverse(pts.begin(), pts.end());
    return pts;
}

Pose resolve_position(const PositionSpec& spec, const MapGraph& map, const MapBindings& bindings,
                      const std::map<std::string, Pose>& placed, std::mt19937_64& rng) {
    auto lane_by_name = [&](const std::string& name) -> const LaneRec* {
        auto it = bindings.ids.find(name);
        if (it != bindings.ids.end() && bindings.kinds.at(name) == MapObjectKind::Lane) return map.find_lane(it->second);
        return map.find_lane(name);
    };
    switch (spec.kind) {
    case PositionSpec::Kind::Unspecified: {
        // Start of travel on the first lane of the first bound road, else the map's first lane.
        const LaneRec* lane = nullptr;
        for (const auto& road : map.roads) {
            bool bound = false;
            for (const auto& [name, id] : bindings.ids)
                if (bindings.kinds.at(name) == MapObjectKind::Road && id == road.id) bound = true;
            if (bound && !road.lane_ids.empty()) {
                lane = map.find_lane(road.lane_ids.front());
                break;
            }
        }
        if (!lane && !map.lanes.empty()) lane = &map.lanes.front();
        if (!lane) throw PositionError("map has no lanes to place an actor on");
        double s = lane->heading_direction > 0 ? 0.0 : lane_length(*lane);
        Pose p = lane_pose(*lane, s).pose;
        p.heading = lane_travel_heading(*lane, s);
        return p;
    }
    case PositionSpec::Kind::AbsoluteLane: {
        const LaneRec* lane = lane_by_name(spec.lane);
        if (!lane) throw PositionError("unbound lane '" + spec.lane + "'");
        std::uniform_real_distribution<double> u(0.0, lane_length(*lane));
        double s = u(rng);
        Pose p = lane_pose(*lane, s).pose;
        p.heading = lane_travel_heading(*lane, s);
        return p;
    }
    case PositionSpec::Kind::Coordinate: {
        Pose p{spec.x, spec.y, 0.0};
        if (const LaneRec* lane = nearest_lane(map, p.position()))
            p.heading = lane_travel_heading(*lane, project_onto_lane(*lane, p.position()).s);
        return p;
    }
    case PositionSpec::Kind::Relative: {
        auto it = placed.find(spec.anchor);
        if (it == placed.end()) throw PositionError("unresolved anchor '" + spec.anchor + "'");
        const Pose& a = it->second;
        Pose p;
        p.x = a.x + spec.front_distance * std::cos(a.heading);
        p.y = a.y + spec.front_distance * std::sin(a.heading);
        p.heading = normalize_angle(a.heading - spec.angle_deg * std::numbers::pi / 180.0);
        return p;
    }
    }
    throw PositionError("unknown position kind");
}

} // namespace bts
