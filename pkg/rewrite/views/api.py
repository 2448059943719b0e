import logging

from rest_framework import generics, status
from rest_framework.permissions import IsAuthenticated
from rest_framework.response import Response

from rewrite.exceptions import RewriteException
from rewrite.rewriter import plan_delete, rewrite_select
from rewrite.serializers import RewritePlanSerializer, RewriteRequestSerializer

logger = logging.getLogger(__name__)


class APIRewrite(generics.GenericAPIView):
    """Rewrites a SELECT or DELETE into its ICDB form

    INSERT needs the owner's keys and ICRL, so it is only available through
    the icdb_rewrite command.
    """
    permission_classes = (IsAuthenticated,)
    serializer_class = RewriteRequestSerializer

    def post(self, request, *args, **kwargs):
        serializer = self.get_serializer(data=request.data)
        serializer.is_valid(raise_exception=True)
        data = serializer.validated_data

        try:
            catalog = data['schema'].to_icdb(data['model'], data['suffix'])
            kind = data['sql'].lstrip().split(None, 1)[0].upper() if data['sql'].strip() else ''
            if kind == 'DELETE':
                plan = plan_delete(data['sql'], catalog, data['model'])
            elif kind == 'SELECT':
                plan = rewrite_select(data['sql'], catalog, data['model'], data['scheme'])
            else:
                return Response({'detail': 'Only SELECT and DELETE can be rewritten here'},
                                status=status.HTTP_400_BAD_REQUEST)
        except RewriteException as e:
            logger.info('Rejected rewrite request: {}'.format(e))
            return Response({'detail': str(e)}, status=status.HTTP_400_BAD_REQUEST)

        return Response(RewritePlanSerializer(plan).data)
