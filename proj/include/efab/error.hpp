// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace efab {

enum class Errc {
  // fabric-model
  UnknownTileName,
  RaggedGrid,
  UnpairedDspHalf,
  MissingTermination,
  // bitstream
  WidthMismatch,
  MissingTileConfig,
  BadMagic,
  DigestMismatch,
  CrcMismatch,
  TruncatedStream,
  // fabric-sim
  CombinationalLoop,
  NotSimulatable,
  InvalidConfig,
  NoCyclesRun,
  // cad-flow
  UnconnectedPin,
  CapacityExceeded,
  Unroutable,
  // link-protocols
  InvalidControlCode,
  InvalidSymbol,
  DisparityError,
  CrcError,
  UnmappedAddress,
  ConfigCommitFailed,
  InvalidSyncHeader,
  MissingSof,
  MissingEof,
  Oversize,
  MalformedFrame,
  ZeroState,
  Deadlock,
  // pixel-ml / tree-compiler
  EmptyDataset,
  SingleClassDataset,
  SchemaError,
  DepthExceeded,
  FeatureIndexOutOfRange,
  Overflow,
  TooManyNodes,
  // general
  ParseError,
  IoError,
  InvalidArgument,
};

std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace efab
