#pragma once

#include <stdexcept>
#include <string>

namespace mortarbench
{

/// Base class of every error raised by the library.
class Error : public std::runtime_error
{
public:
   using std::runtime_error::runtime_error;
};

/// Degenerate facets, normals or planes.
class GeometryError : public Error
{
public:
   using Error::Error;
};

/// Partition request that cannot be honoured (e.g. more parts than entities).
class InfeasiblePartition : public Error
{
public:
   using Error::Error;
};

/// Message addressed to a rank outside [0, nranks).
class RoutingError : public Error
{
public:
   using Error::Error;
};

/// Bin grid used after the interface moved further than its bin size.
class StaleGridError : public Error
{
public:
   using Error::Error;
};

/// Triplet addressed to a node that has no row owner.
class AssemblyError : public Error
{
public:
   using Error::Error;
};

/// Invalid user configuration or incomparable runs.
class ConfigError : public Error
{
public:
   using Error::Error;
};

} // namespace mortarbench
