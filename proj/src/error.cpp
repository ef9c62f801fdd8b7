// SPDX-License-Identifier: Apache-2.0
#include "efab/error.hpp"

namespace efab {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::UnknownTileName:
      return "UnknownTileName";
    case Errc::RaggedGrid:
      return "RaggedGrid";
    case Errc::UnpairedDspHalf:
      return "UnpairedDspHalf";
    case Errc::MissingTermination:
      return "MissingTermination";
    case Errc::WidthMismatch:
      return "WidthMismatch";
    case Errc::MissingTileConfig:
      return "MissingTileConfig";
    case Errc::BadMagic:
      return "BadMagic";
    case Errc::DigestMismatch:
      return "DigestMismatch";
    case Errc::CrcMismatch:
      return "CrcMismatch";
    case Errc::TruncatedStream:
      return "TruncatedStream";
    case Errc::CombinationalLoop:
      return "CombinationalLoop";
    case Errc::NotSimulatable:
      return "NotSimulatable";
    case Errc::InvalidConfig:
      return "InvalidConfig";
    case Errc::NoCyclesRun:
      return "NoCyclesRun";
    case Errc::UnconnectedPin:
      return "UnconnectedPin";
    case Errc::CapacityExceeded:
      return "CapacityExceeded";
    case Errc::Unroutable:
      return "Unroutable";
    case Errc::InvalidControlCode:
      return "InvalidControlCode";
    case Errc::InvalidSymbol:
      return "InvalidSymbol";
    case Errc::DisparityError:
      return "DisparityError";
    case Errc::CrcError:
      return "CrcError";
    case Errc::UnmappedAddress:
      return "UnmappedAddress";
    case Errc::ConfigCommitFailed:
      return "ConfigCommitFailed";
    case Errc::InvalidSyncHeader:
      return "InvalidSyncHeader";
    case Errc::MissingSof:
      return "MissingSof";
    case Errc::MissingEof:
      return "MissingEof";
    case Errc::Oversize:
      return "Oversize";
    case Errc::MalformedFrame:
      return "MalformedFrame";
    case Errc::ZeroState:
      return "ZeroState";
    case Errc::Deadlock:
      return "Deadlock";
    case Errc::EmptyDataset:
      return "EmptyDataset";
    case Errc::SingleClassDataset:
      return "SingleClassDataset";
    case Errc::SchemaError:
      return "SchemaError";
    case Errc::DepthExceeded:
      return "DepthExceeded";
    case Errc::FeatureIndexOutOfRange:
      return "FeatureIndexOutOfRange";
    case Errc::Overflow:
      return "Overflow";
    case Errc::TooManyNodes:
      return "TooManyNodes";
    case Errc::ParseError:
      return "ParseError";
    case Errc::IoError:
      return "IoError";
    case Errc::InvalidArgument:
      return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace efab
