from rest_framework import serializers

from rewrite.exceptions import RewriteException
from rewrite.schema import Model, SchemaCatalog


class RewriteRequestSerializer(serializers.Serializer):
    sql = serializers.CharField(trim_whitespace=False)
    model = serializers.ChoiceField(choices=[model.value for model in Model])
    scheme = serializers.ChoiceField(choices=['rsa', 'pbkdf2', 'aes'], default='aes')
    suffix = serializers.CharField(default='_IC')
    schema = serializers.DictField()

    def validate_schema(self, value):
        try:
            return SchemaCatalog.from_dict(value)
        except RewriteException as e:
            raise serializers.ValidationError(str(e))


class FieldCheckSerializer(serializers.Serializer):
    table = serializers.CharField()
    attribute = serializers.CharField()
    value_index = serializers.IntegerField()
    ic_index = serializers.IntegerField()
    key_indexes = serializers.ListField(child=serializers.IntegerField())


class TupleCheckSerializer(serializers.Serializer):
    table = serializers.CharField()
    values = serializers.SerializerMethodField()
    serial_index = serializers.IntegerField()
    ic_index = serializers.IntegerField()
    complete = serializers.BooleanField()

    def get_values(self, obj):
        return [{'attribute': attribute, 'index': index} for attribute, index in obj.values]


class RewritePlanSerializer(serializers.Serializer):
    kind = serializers.CharField()
    model = serializers.CharField(source='model.value')
    icdb_sql = serializers.CharField()
    columns = serializers.ListField(child=serializers.CharField())
    field_checks = FieldCheckSerializer(many=True)
    tuple_checks = TupleCheckSerializer(many=True)
    second_fetch_sql = serializers.CharField(allow_null=True)
    statement_sql = serializers.CharField(allow_null=True)
    post_actions = serializers.ListField(child=serializers.CharField())
    distinct = serializers.BooleanField()
