#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace artready {

/// Failure categories surfaced by the library. Each kind is a distinct
/// diagnostic so callers (and the CLI) can map them to exit codes and
/// report classifications without string matching.
enum class ErrorKind {
  MalformedXml,
  CyclicJointGraph,
  MultipleRoots,
  UnresolvedReference,
  DuplicateName,
  InvalidValue,
  SemanticsParse,
  UnknownJoint,
  Serialization,
  MeshFormat,
  MeshIo,
  EmptyMesh,
  PlanarDegeneracy,
  Asymmetric,
  InvalidArgument,
  OverlayReject,
  UnknownReference,
  Transport,
  RetriesExhausted,
  SchemaInvalid,
  NoProposal,
  MissingInertial,
  Instability,
  EmptyTrajectory,
  Config,
  Io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string location = {});

  ErrorKind kind() const noexcept { return kind_; }
  /// Element, field path or line where the problem was found; may be empty.
  const std::string& location() const noexcept { return location_; }

 private:
  ErrorKind kind_;
  std::string location_;
};

}  // namespace artready
