#include "artready/proposer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "artready/error.hpp"
#include "artready/text.hpp"

namespace artready {

ExtractedInfo extract_info(const AssetModel& model, const SemanticMap& semantics, std::string guidance,
                           const std::vector<View>& views, const RenderOptions& render) {
  ExtractedInfo info;
  info.model = model;
  info.semantics = semantics;
  info.analyses = analyze_links(model);
  info.guidance = std::move(guidance);
  if (!views.empty()) {
    JointConfig q;
    if (model.documented_initial_state) q.values = *model.documented_initial_state;
    q = project_to_limits(q, model);
    auto images = render_views(model, q, views, render);
    for (std::size_t i = 0; i < views.size(); ++i) info.views.emplace_back(views[i], std::move(images[i]));
  }
  return info;
}

Vec3 assembled_extents(const AssetModel& model) {
  const auto poses = forward_kinematics(model, {});
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const auto& link : model.links) {
    const TriMesh g = link_geometry(model, link);
    const Transform& pose = poses.at(link.name);
    for (const auto& v : g.vertices) {
      const Vec3 w = pose * v;
      lo = lo.cwiseMin(w);
      hi = hi.cwiseMax(w);
    }
  }
  if (!(lo.array() <= hi.array()).all()) return Vec3::Zero();
  return hi - lo;
}

namespace {

ordered_json vec_json(const Vec3& v) { return ordered_json::array({v.x(), v.y(), v.z()}); }

std::string label_of(const SemanticMap& semantics, const std::string& link) {
  const auto it = semantics.entries.find(link);
  return it == semantics.entries.end() ? std::string() : it->second.semantic_label;
}

}  // namespace

ordered_json object_info_json(const ExtractedInfo& info) {
  const AssetModel& m = info.model;
  ordered_json doc;
  doc["name"] = m.name;
  doc["user_guidance"] = info.guidance.empty() ? "Not specified" : info.guidance;
  doc["assembled_dimensions_m"] = vec_json(assembled_extents(m));

  ordered_json links = ordered_json::object();
  for (const auto& link : m.links) {
    ordered_json e;
    if (auto label = label_of(info.semantics, link.name); !label.empty()) e["semantic_label"] = label;
    if (const auto a = info.analyses.find(link.name); a != info.analyses.end()) {
      e["mesh_volume_m3"] = a->second.volume;
      e["volume_source"] = to_string(a->second.volume_source);
      e["surface_area_m2"] = a->second.surface_area;
      e["bbox_extents_m"] = vec_json(a->second.extents());
      e["center_of_mass"] = vec_json(a->second.center_of_mass);
      e["watertight"] = a->second.watertight;
    } else {
      e["geometry"] = "none";
    }
    if (link.mass) e["existing_mass"] = *link.mass;
    if (link.inertia) {
      const auto& i = *link.inertia;
      e["existing_inertia"] = {{"ixx", i.ixx}, {"iyy", i.iyy}, {"izz", i.izz},
                               {"ixy", i.ixy}, {"ixz", i.ixz}, {"iyz", i.iyz}};
    }
    links[link.name] = std::move(e);
  }
  doc["links"] = std::move(links);

  ordered_json joints = ordered_json::object();
  for (const auto& j : m.joints) {
    ordered_json e;
    e["type"] = to_string(j.type);
    e["parent"] = j.parent;
    e["child"] = j.child;
    e["axis"] = j.axis;
    if (const auto s = info.semantics.entries.find(j.child); s != info.semantics.entries.end()) {
      e["semantic_joint_kind"] = s->second.joint_kind;
    }
    if (j.limits) e["limits"] = {{"lower", j.limits->lower}, {"upper", j.limits->upper}};
    if (j.dynamics) {
      ordered_json d = ordered_json::object();
      if (j.dynamics->damping) d["damping"] = *j.dynamics->damping;
      if (j.dynamics->friction) d["friction"] = *j.dynamics->friction;
      if (j.dynamics->stiffness) d["stiffness"] = *j.dynamics->stiffness;
      e["existing_dynamics"] = std::move(d);
    }
    joints[j.name] = std::move(e);
  }
  doc["joints"] = std::move(joints);
  if (m.documented_initial_state) doc["documented_initial_state"] = *m.documented_initial_state;
  return doc;
}

std::string_view to_string(MaterialClass c) {
  switch (c) {
    case MaterialClass::Metal: return "metal";
    case MaterialClass::Plastic: return "plastic";
    case MaterialClass::Rubber: return "rubber";
  }
  return "plastic";
}

MaterialPrior material_prior(MaterialClass c) {
  switch (c) {
    case MaterialClass::Metal: return {c, 2700.0, 8000.0, 2700.0};
    case MaterialClass::Rubber: return {c, 1000.0, 1500.0, 1200.0};
    case MaterialClass::Plastic: break;
  }
  return {MaterialClass::Plastic, 900.0, 1400.0, 1040.0};
}

MaterialClass material_from_label(std::string_view label) {
  for (const char* k : {"steel", "metal", "aluminum", "brass"}) {
    if (contains_ci(label, k)) return MaterialClass::Metal;
  }
  for (const char* k : {"rubber", "grip"}) {
    if (contains_ci(label, k)) return MaterialClass::Rubber;
  }
  return MaterialClass::Plastic;
}

namespace {

bool mentions_spring(std::string_view guidance) {
  for (const char* neg : {"no spring", "without spring", "not spring", "non-spring", "no spring-back"}) {
    if (contains_ci(guidance, neg)) return false;
  }
  for (const char* k : {"spring", "self-closing", "self closing", "snaps back", "snap back", "returns to"}) {
    if (contains_ci(guidance, k)) return true;
  }
  return false;
}

enum class StateWord { None, Closed, SlightlyOpen, Half, Open };

StateWord state_word(std::string_view guidance) {
  if (contains_ci(guidance, "fully open") || contains_ci(guidance, "wide open")) return StateWord::Open;
  if (contains_ci(guidance, "slightly open") || contains_ci(guidance, "ajar")) return StateWord::SlightlyOpen;
  if (contains_ci(guidance, "half")) return StateWord::Half;
  if (contains_ci(guidance, "closed") || contains_ci(guidance, "shut")) return StateWord::Closed;
  if (contains_ci(guidance, "open")) return StateWord::Open;
  return StateWord::None;
}

double state_value(StateWord w, const JointLimits& l) {
  const double rest = std::clamp(0.0, l.lower, l.upper);
  const double far = std::abs(l.upper - rest) >= std::abs(l.lower - rest) ? l.upper : l.lower;
  switch (w) {
    case StateWord::Closed: return rest;
    case StateWord::SlightlyOpen: return rest + 0.15 * (far - rest);
    case StateWord::Half: return 0.5 * (l.lower + l.upper);
    case StateWord::Open: return far;
    case StateWord::None: break;
  }
  return rest;
}

double choose_scale(const ExtractedInfo& info, const HeuristicConfig& cfg, std::string* reasoning) {
  const Vec3 ext = assembled_extents(info.model);
  const double largest = ext.maxCoeff();
  if (!(largest > 0.0)) {
    *reasoning = "SIZE REASONING: no geometry, scale kept at 1";
    return 1.0;
  }
  std::string category = "handheld";
  for (const auto& [key, size] : cfg.category_target_size) {
    if (key == "handheld") continue;
    bool hit = contains_ci(info.model.name, key) || contains_ci(info.guidance, key);
    for (const auto& [link, e] : info.semantics.entries) hit = hit || contains_ci(e.semantic_label, key);
    if (hit) {
      category = key;
      break;
    }
  }
  double s = 1.0;
  if (const auto it = cfg.category_target_size.find(category); it != cfg.category_target_size.end()) {
    s = it->second / largest;
  }
  std::array<double, 3> sorted{ext.x(), ext.y(), ext.z()};
  std::sort(sorted.begin(), sorted.end());
  // Two of the three final dimensions must fit the gripper.
  if (sorted[1] * s > cfg.gripper_limit) {
    s = cfg.gripper_limit / sorted[1];
    while (sorted[1] * s > cfg.gripper_limit) s = std::nextafter(s, 0.0);
  }
  *reasoning = "SIZE REASONING: category " + category + ", largest extent " + format_fixed(largest, 4) +
               " m, scale " + format_number(s) + " (second extent " + format_fixed(sorted[1] * s, 4) + " m)";
  return s;
}

}  // namespace

Overlay propose_overlay(const ExtractedInfo& info, const HeuristicConfig& cfg) {
  const AssetModel& model = info.model;
  Overlay o;
  std::string size_note;
  o.uniform_scale_factor = choose_scale(info, cfg, &size_note);
  const double s = o.uniform_scale_factor;
  o.validation_notes.push_back("HEURISTIC PROPOSER: deterministic keyword and geometry rules");
  o.validation_notes.push_back(size_note);

  std::string mass_note = "MASS CALCULATIONS:";
  for (const auto& link : model.links) {
    const auto a = info.analyses.find(link.name);
    if (a == info.analyses.end()) {
      if (!link.visual_meshes.empty() || !link.collision_meshes.empty()) {
        throw Error(ErrorKind::InvalidArgument, "missing mesh analysis", link.name);
      }
      continue;
    }
    const MeshAnalysis& an = a->second;
    const std::string label = label_of(info.semantics, link.name);
    const MaterialPrior prior = material_prior(material_from_label(label + " " + link.name));
    const Vec3 ext = an.extents();
    const double box_volume = ext.prod();
    const double fill = box_volume > 0.0 ? an.volume / box_volume : 0.0;
    const double hollow = an.watertight && fill > cfg.solid_fill_ratio ? cfg.hollow_solid : cfg.hollow_shell;
    const double mass = estimate_link_mass(std::max(an.volume, 1e-12), prior.default_density, s, hollow);

    LinkOverlay lo;
    lo.mass = mass;
    const Vec3 dims = (ext * s).cwiseMax(Vec3::Constant(1e-3));
    lo.inertia = shape_inertia(mass, BoxShape{dims.x(), dims.y(), dims.z()});
    lo.center_of_mass = to_triple(an.center_of_mass * s);
    lo.extra["_action"] = "new";
    lo.extra["_visual_notes"] = std::string(to_string(prior.material)) + " by label, density " +
                                format_number(prior.default_density) + ", hollow " + format_number(hollow);
    o.links[link.name] = std::move(lo);
    mass_note += " " + link.name + "=" + format_fixed(mass, 4) + "kg";
  }
  o.validation_notes.push_back(mass_note);
  o.validation_notes.push_back("INERTIA ASSUMPTIONS: solid box over the scaled bounding box of each link");

  const bool spring = mentions_spring(info.guidance);
  for (const auto& j : model.joints) {
    if (!j.active()) continue;
    JointOverlay jo;
    const JointDynamics d = default_passive_dynamics(j.type);
    jo.damping = d.damping;
    jo.friction = d.friction;
    jo.stiffness = 0.0;
    if (spring && j.type == JointType::Revolute) jo.stiffness = cfg.revolute_spring;
    if (spring && j.type == JointType::Prismatic) jo.stiffness = cfg.prismatic_spring;
    jo.extra["_action"] = "new";
    o.joints[j.name] = std::move(jo);
  }
  o.validation_notes.push_back("JOINT DYNAMICS: passive defaults, stiffness 0 unless spring return is requested");
  if (spring) o.validation_notes.push_back("SPRING CHECK: guidance asks for spring return");

  // Joint state only when the guidance names one.
  if (const StateWord w = state_word(info.guidance); w != StateWord::None) {
    std::vector<const JointSpec*> chosen;
    std::vector<const JointSpec*> limited;
    for (const auto& j : model.joints) {
      if (!j.active() || !j.limits || j.type == JointType::Continuous) continue;
      limited.push_back(&j);
      const std::string label = label_of(info.semantics, j.child);
      if (contains_ci(info.guidance, j.name) || contains_ci(info.guidance, j.child) ||
          (!label.empty() && contains_ci(info.guidance, label))) {
        chosen.push_back(&j);
      }
    }
    if (chosen.empty()) chosen = limited;
    if (!chosen.empty()) {
      std::map<std::string, double> init;
      for (const JointSpec* j : chosen) init[j->name] = state_value(w, *j->limits);
      o.initial_joint_positions = std::move(init);
      o.initial_extra["_reasoning"] = "state keyword in guidance mapped onto joint limits";
      o.validation_notes.push_back("STATE CONFIGURATION: limit-based value from the guidance keyword");
    }
  }
  o.validation_notes.push_back("UNIT CHECK: angular values in radians");
  return o;
}

// ---------------------------------------------------------------------------

std::string_view to_string(UpdateAction a) {
  switch (a) {
    case UpdateAction::Approve: return "approve";
    case UpdateAction::CollisionReduction: return "collision_reduction";
    case UpdateAction::StateCorrection: return "state_correction";
  }
  return "collision_reduction";
}

StateUpdate state_update_from_json(const ordered_json& doc) {
  const auto bad = [](const std::string& msg, const std::string& path) {
    return Error(ErrorKind::SchemaInvalid, msg, path);
  };
  if (!doc.is_object()) throw bad("state update must be an object", "$");
  StateUpdate u;
  const auto approved = doc.find("approved");
  if (approved == doc.end() || !approved->is_boolean()) throw bad("approved must be a boolean", "approved");
  u.approved = approved->get<bool>();
  if (const auto ok = doc.find("state_ok"); ok != doc.end()) {
    if (!ok->is_boolean()) throw bad("state_ok must be a boolean", "state_ok");
    u.state_ok = ok->get<bool>();
  }
  u.action = u.approved ? UpdateAction::Approve : UpdateAction::CollisionReduction;
  if (const auto act = doc.find("action"); act != doc.end()) {
    if (!act->is_string()) throw bad("action must be a string", "action");
    const std::string a = act->get<std::string>();
    if (a == "approve") u.action = UpdateAction::Approve;
    else if (a == "collision_reduction") u.action = UpdateAction::CollisionReduction;
    else if (a == "state_correction") u.action = UpdateAction::StateCorrection;
    else throw bad("unknown action '" + a + "'", "action");
  }
  if (const auto r = doc.find("reason"); r != doc.end() && r->is_string()) u.reason = r->get<std::string>();
  if (u.approved) return u;  // deltas are meaningless on approval

  const auto updates = doc.find("joint_updates");
  if (updates == doc.end()) return u;
  if (!updates->is_array()) throw bad("joint_updates must be an array", "joint_updates");
  for (std::size_t i = 0; i < updates->size(); ++i) {
    const auto& e = (*updates)[i];
    const std::string path = "joint_updates[" + std::to_string(i) + "]";
    if (!e.is_object() || !e.contains("joint") || !e["joint"].is_string()) throw bad("entry needs a joint name", path);
    if (!e.contains("delta") || !e["delta"].is_number()) throw bad("entry needs a numeric delta", path + ".delta");
    const double d = e["delta"].get<double>();
    if (!std::isfinite(d)) throw bad("delta must be finite", path + ".delta");
    u.joint_deltas[e["joint"].get<std::string>()] += d;
  }
  return u;
}

ordered_json state_update_to_json(const StateUpdate& u) {
  ordered_json doc;
  doc["approved"] = u.approved;
  doc["state_ok"] = u.state_ok;
  doc["action"] = to_string(u.action);
  doc["reason"] = u.reason;
  if (!u.approved) {
    ordered_json updates = ordered_json::array();
    for (const auto& [j, d] : u.joint_deltas) updates.push_back({{"joint", j}, {"delta", d}});
    doc["joint_updates"] = std::move(updates);
  }
  return doc;
}

// ---------------------------------------------------------------------------

double HeuristicStateProposer::step_fraction(double penetration) {
  if (penetration > 0.02) return 0.10;
  if (penetration < 0.01) return 0.02;
  return 0.05;
}

namespace {

double joint_range(const JointSpec& j) {
  if (j.type == JointType::Continuous || !j.limits) return 2.0 * M_PI;
  return j.limits->upper - j.limits->lower;
}

}  // namespace

StateUpdate HeuristicStateProposer::propose(const RefinementContext& ctx) {
  ++queries_;
  StateUpdate u;
  if (ctx.penetration <= ctx.tolerance) {
    u.approved = true;
    u.action = UpdateAction::Approve;
    u.reason = "penetration " + format_fixed(ctx.penetration, 6) + " m within tolerance";
    return u;
  }
  if (ctx.focus_joints.empty()) throw Error(ErrorKind::NoProposal, "no focus joints to adjust");
  if (!ctx.model || !ctx.collision) throw Error(ErrorKind::InvalidArgument, "context lacks model or collision data");

  const auto ranked = ctx.report.ranked_pairs();
  const double frac = step_fraction(ctx.penetration) * (ctx.attempt > 0 ? 0.5 : 1.0);

  struct Candidate {
    std::string joint;
    double delta = 0.0;
    double pair = std::numeric_limits<double>::infinity();
    double total = std::numeric_limits<double>::infinity();
  };
  std::optional<Candidate> best;
  for (const auto& name : ctx.focus_joints) {
    const JointSpec* j = ctx.model->find_joint(name);
    if (!j || !j->active()) continue;
    const double step = frac * joint_range(*j);
    const double q0 = ctx.q.get(name);
    for (double sign : {1.0, -1.0}) {
      JointConfig trial = ctx.q;
      trial.values[name] = q0 + sign * step;
      trial = project_to_limits(trial, *ctx.model);
      const double moved = trial.get(name) - q0;
      if (std::abs(moved) < 1e-12) continue;
      Candidate c{name, moved};
      c.total = ctx.collision->penetration(trial);
      c.pair = ranked.empty() ? c.total : ctx.collision->pair_penetration(trial, ranked.front().first);
      if (!best || c.pair < best->pair - 1e-12 || (std::abs(c.pair - best->pair) <= 1e-12 && c.total < best->total)) {
        best = c;
      }
    }
  }
  if (!best) throw Error(ErrorKind::NoProposal, "every focus joint is pinned at its limits");

  u.approved = false;
  u.state_ok = true;
  u.action = UpdateAction::CollisionReduction;
  u.joint_deltas[best->joint] = best->delta;
  u.reason = "moving " + best->joint + " by " + format_number(best->delta);
  if (!ranked.empty()) {
    u.reason += " targets " + ranked.front().first.first + "/" + ranked.front().first.second;
  }
  return u;
}

// ---------------------------------------------------------------------------

std::string format_template(std::string_view text, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '}') {
      if (i + 1 < text.size() && text[i + 1] == '}') ++i;
      out += '}';
      continue;
    }
    if (c != '{') {
      out += c;
      continue;
    }
    if (i + 1 < text.size() && text[i + 1] == '{') {
      out += '{';
      ++i;
      continue;
    }
    const std::size_t close = text.find('}', i);
    if (close == std::string_view::npos) throw Error(ErrorKind::InvalidArgument, "unterminated placeholder");
    const std::string_view field = text.substr(i + 1, close - i - 1);
    const std::size_t colon = field.find(':');
    const std::string name(field.substr(0, colon));
    const auto it = values.find(name);
    if (it == values.end()) throw Error(ErrorKind::InvalidArgument, "no value for placeholder", name);
    if (colon == std::string_view::npos) {
      out += it->second;
    } else {
      const std::string_view spec = field.substr(colon + 1);
      const auto number = parse_number(it->second);
      if (spec.size() < 3 || spec.front() != '.' || spec.back() != 'f' || !number) {
        throw Error(ErrorKind::InvalidArgument, "unsupported format spec", std::string(field));
      }
      const auto digits = parse_number(spec.substr(1, spec.size() - 2));
      if (!digits) throw Error(ErrorKind::InvalidArgument, "unsupported format spec", std::string(field));
      out += format_fixed(*number, static_cast<int>(*digits));
    }
    i = close;
  }
  return out;
}

std::string overlay_prompt(const ExtractedInfo& info) {
  return format_template(prompt_template(PromptId::OverlayGeneration),
                         {{"object_info", object_info_json(info).dump(2)}});
}

namespace {

std::string pair_text(const LinkPair& p) { return p.first + " <-> " + p.second; }

}  // namespace

std::string state_prompt(const RefinementContext& ctx) {
  if (!ctx.model) throw Error(ErrorKind::InvalidArgument, "context lacks a model");
  const auto ranked = ctx.report.ranked_pairs();

  std::string description;
  if (ranked.empty()) {
    description = "no penetrating pairs";
  } else {
    description = std::to_string(ranked.size()) + " penetrating pair(s); deepest " + pair_text(ranked.front().first) +
                  " at " + format_fixed(ranked.front().second, 6) + " m";
  }

  ordered_json top = ordered_json::array();
  for (std::size_t i = 0; i < ranked.size() && i < 6; ++i) {
    top.push_back({{"pair", ordered_json::array({ranked[i].first.first, ranked[i].first.second})},
                   {"penetration_m", ranked[i].second}});
  }
  ordered_json resolved = ordered_json::array();
  for (std::size_t i = 0; i < ctx.resolved_pairs.size() && i < 6; ++i) {
    resolved.push_back(ordered_json::array({ctx.resolved_pairs[i].first, ctx.resolved_pairs[i].second}));
  }

  std::string focus_list;
  ordered_json focus_info = ordered_json::array();
  for (std::size_t i = 0; i < ctx.focus_joints.size() && i < 8; ++i) {
    const std::string& name = ctx.focus_joints[i];
    focus_list += (focus_list.empty() ? "- " : "\n- ") + name;
    const JointSpec* j = ctx.model->find_joint(name);
    if (!j) continue;
    ordered_json e;
    e["name"] = name;
    e["type"] = to_string(j->type);
    e["child_link"] = j->child;
    if (ctx.semantics) {
      if (const auto s = ctx.semantics->entries.find(j->child); s != ctx.semantics->entries.end()) {
        e["semantic"] = s->second.semantic_label;
      }
    }
    if (j->limits && j->type != JointType::Continuous) {
      e["limit"] = {{"lower", j->limits->lower}, {"upper", j->limits->upper}};
    }
    e["range"] = joint_range(*j);
    e["unit"] = j->type == JointType::Prismatic ? "meters" : "radians";
    e["current"] = ctx.q.get(name);
    if (const auto t = ctx.target.values.find(name); t != ctx.target.values.end()) e["target"] = t->second;
    focus_info.push_back(std::move(e));
  }
  if (focus_list.empty()) focus_list = "(none)";

  std::string direct;
  for (const auto& j : ctx.direct_colliding_joints) direct += (direct.empty() ? "" : ", ") + j;
  if (direct.empty()) direct = "none";

  std::string prompt = format_template(prompt_template(PromptId::StateRefinement),
                                       {{"user_hint", ctx.hint.empty() ? "Not specified" : ctx.hint},
                                        {"penetration_sum", format_number(ctx.penetration)},
                                        {"severity", severity_band(ctx.penetration)},
                                        {"contact_count", std::to_string(ctx.report.penetrating_count())},
                                        {"collision_description", description},
                                        {"top_pen_sums", top.dump()},
                                        {"resolved_pairs", resolved.dump()},
                                        {"direct_colliding_joints", direct},
                                        {"focus_joints_list", focus_list},
                                        {"focus_info", focus_info.dump(2)}});
  if (!ctx.rejection_note.empty()) prompt += "\n\nPrevious proposal rejected: " + ctx.rejection_note + "\n";
  return prompt;
}

}  // namespace artready
