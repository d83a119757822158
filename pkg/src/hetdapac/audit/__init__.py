from .audits import (AuditReport, audit_attribute_privacy, audit_correctness, audit_database_secrecy,
                     audit_query_message_independence)
from .tables import DistributionTable, max_pairwise_tv, mutual_information_bits, tv_distance

__all__ = ["AuditReport", "DistributionTable", "audit_attribute_privacy", "audit_correctness",
           "audit_database_secrecy", "audit_query_message_independence", "max_pairwise_tv",
           "mutual_information_bits", "tv_distance"]
