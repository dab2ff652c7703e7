# Copyright 2024 The CompChall Authors. All rights reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


class CompChallError(Exception):
    pass


class EncodingError(CompChallError):
    pass


class DomainError(CompChallError):
    pass


class ConfigurationError(CompChallError):
    pass


class ChallengeError(CompChallError):
    pass


class PuzzleNotFound(CompChallError):
    def __init__(self, evaluations: int):
        super(PuzzleNotFound, self).__init__(f"no candidate matched after {evaluations} hash evaluations")
        self.evaluations = evaluations


class VerificationError(CompChallError):
    pass


class UnknownUserError(VerificationError):
    def __init__(self, user_id: str):
        super(UnknownUserError, self).__init__(f"unknown user: {user_id!r}")
        self.user_id = user_id


class ChainExhaustedError(VerificationError):
    pass


class EnrollmentError(CompChallError):
    pass


class StoreError(CompChallError):
    pass


class IncompatibleStoreError(StoreError):
    pass


class StoreParseError(StoreError):
    def __init__(self, line_number: int, reason: str):
        super(StoreParseError, self).__init__(f"line {line_number}: {reason}")
        self.line_number = line_number


class ProtocolError(CompChallError):
    def __init__(self, code: str, detail: str = ""):
        super(ProtocolError, self).__init__(f"{code}: {detail}" if detail else code)
        self.code = code


class StartupError(CompChallError):
    pass


class ReportError(CompChallError):
    pass
