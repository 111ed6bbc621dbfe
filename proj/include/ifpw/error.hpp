/*
* Copyright (C) 2026 ifpw authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*/
#ifndef IFPW_ERROR_HPP
#define IFPW_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ifpw
{

/// Base of every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Queue parameters violate lambda < n * mu.
class StabilityError : public Error
{
public:
    using Error::Error;
};

class ArgumentError : public Error
{
public:
    using Error::Error;
};

class RangeError : public Error
{
public:
    using Error::Error;
};

class ShapeError : public Error
{
public:
    using Error::Error;
};

class ConfigError : public Error
{
public:
    using Error::Error;
};

class CalibrationError : public Error
{
public:
    using Error::Error;
};

class DegenerateDataError : public Error
{
public:
    using Error::Error;
};

/// Integration produced NaN/inf or negative densities beyond tolerance.
class NumericalError : public Error
{
public:
    NumericalError(const std::string& what, long cell = -1)
        : Error(what)
        , m_cell(cell)
    {
    }
    long cell() const
    {
        return m_cell;
    }

private:
    long m_cell;
};

/// RK4 step went negative beyond the clamp tolerance; retry with a smaller step.
class StepSizeError : public NumericalError
{
public:
    using NumericalError::NumericalError;
};

class SolverError : public Error
{
public:
    using Error::Error;
};

class FrontNotFoundError : public Error
{
public:
    using Error::Error;
};

class InsufficientRunError : public Error
{
public:
    using Error::Error;
};

} // namespace ifpw

#endif // IFPW_ERROR_HPP
