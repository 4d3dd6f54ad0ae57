#include "artready/error.hpp"

namespace artready {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedXml: return "malformed-xml";
    case ErrorKind::CyclicJointGraph: return "cyclic-joint-graph";
    case ErrorKind::MultipleRoots: return "multiple-roots";
    case ErrorKind::UnresolvedReference: return "unresolved-reference";
    case ErrorKind::DuplicateName: return "duplicate-name";
    case ErrorKind::InvalidValue: return "invalid-value";
    case ErrorKind::SemanticsParse: return "semantics-parse";
    case ErrorKind::UnknownJoint: return "unknown-joint";
    case ErrorKind::Serialization: return "serialization";
    case ErrorKind::MeshFormat: return "mesh-format";
    case ErrorKind::MeshIo: return "mesh-io";
    case ErrorKind::EmptyMesh: return "empty-mesh";
    case ErrorKind::PlanarDegeneracy: return "planar-degeneracy";
    case ErrorKind::Asymmetric: return "asymmetric";
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::OverlayReject: return "overlay-reject";
    case ErrorKind::UnknownReference: return "unknown-reference";
    case ErrorKind::Transport: return "transport";
    case ErrorKind::RetriesExhausted: return "retries-exhausted";
    case ErrorKind::SchemaInvalid: return "schema-invalid";
    case ErrorKind::NoProposal: return "no-proposal";
    case ErrorKind::MissingInertial: return "missing-inertial";
    case ErrorKind::Instability: return "instability";
    case ErrorKind::EmptyTrajectory: return "empty-trajectory";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

namespace {
std::string compose(ErrorKind kind, const std::string& message, const std::string& location) {
  std::string out(to_string(kind));
  out += ": ";
  out += message;
  if (!location.empty()) out += " (" + location + ")";
  return out;
}
}  // namespace

Error::Error(ErrorKind kind, const std::string& message, std::string location)
    : std::runtime_error(compose(kind, message, location)), kind_(kind), location_(std::move(location)) {}

}  // namespace artready
